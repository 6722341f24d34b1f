use pyo3::prelude::*;

#[pymodule]
fn qmodal(_m: &Bound<'_, PyModule>) -> PyResult<()> { Ok(()) }
