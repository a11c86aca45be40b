use pyo3::prelude::*;
use pyo3::types::IntoPyDict;

fn run(code: &str) {
    Python::with_gil(|py| {
        let module = pyo3::wrap_pymodule!(orbita_py::orbita_py)(py);
        let locals = [("o", module)].into_py_dict_bound(py);
        py.run_bound("import math", None, Some(&locals)).unwrap();
        if let Err(e) = py.run_bound(code, None, Some(&locals)) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn levi_civita_maps_from_python() {
    run(r#"
p = o.Potential.levi_civita(0.1)
v = o.time_maps(p, -0.5, 1.0)
assert abs(v["T"] - math.pi / (math.sqrt(2) * 0.5 ** 1.5)) < 1e-9
assert v["D"] < 0
assert repr(p).startswith("Potential(")
"#);
}

#[test]
fn torus_round_trip_from_python() {
    run(r#"
t = o.find_torus(o.Potential.homogeneous(0.5), 2 * math.pi, 4, 3)
assert t.residual < 1e-10
r = t.verify()
assert r["winding_n"] == 4 and r["winding_k"] == 3
assert o.Torus.from_json(t.to_json()).L == t.L
"#);
}

#[test]
fn errors_become_python_exceptions() {
    run(r#"
try:
    o.Potential.homogeneous(0.0)
except ValueError:
    pass
else:
    raise AssertionError("alpha = 0 accepted")
try:
    o.find_torus(o.Potential.homogeneous(0.5), 2 * math.pi, 2, 1)
except ValueError:
    pass
else:
    raise AssertionError("inadmissible ratio accepted")
"#);
}

#[test]
fn potential_from_json_description() {
    run(r#"
p = o.Potential.from_json('{"family": "lennard_jones", "varsigma": 1.0, "sigma": 1.0}')
assert p.spec()["family"] == "lennard_jones"
assert abs(p.value(1.0)) < 1e-15
lo, hi = o.energy_window(p, 0.5)
assert lo < 0 < hi
"#);
}
