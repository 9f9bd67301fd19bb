use incentive::incentive;
use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn module_round_trip() {
    pyo3::append_to_inittab!(incentive);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        let code = c"
import incentive as m
g = m.Game.donation(1.8, 1.0)
assert abs(g.delta(3) + 1.9) < 1e-12
assert abs(m.expected_cost(m.Game.donation(2.0, 1.0), 3, 1.0, 'reward', 2.0) - 27.0) < 1e-12
p = m.Phase(3, 'reward')
assert abs(p.f_star - 10.9291) < 1e-3 and abs(p.beta_star(g) - 5.752) < 1e-3
r = m.optimize(g, 3, 10.0, 'reward', 0.7)
assert r.branch == 'AboveThreshold_Theta2' and abs(r.theta_star - 2.16) < 1e-2
try:
    m.optimize(g, 3, 10.0, 'reward', 1.5)
    raise AssertionError('expected ValueError')
except ValueError:
    pass
e = m.simulate(m.Game.donation(2.0, 1.0), 3, 1.0, 'reward', 2.0, 20000, seed=3)
assert abs(e.mean_total_cost - 27.0) < 4 * e.total_cost_standard_error
ok = True
";
        py.run(code, Some(&globals), None).unwrap();
        assert!(globals.get_item("ok").unwrap().is_some());
    });
}
