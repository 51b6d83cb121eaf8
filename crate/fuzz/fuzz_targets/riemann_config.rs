//! Fuzz the Riemann path: configs that survive validation drive the exact
//! solver and its profile evaluation. Bisection and wave classification must
//! hold up under adversarial parameter combinations without panicking.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = garz::config::RunConfig::from_json_str(text) else {
        return;
    };
    let Ok(resolved) = config.resolve() else {
        return;
    };
    let Some(data) = resolved.riemann else {
        return;
    };
    let Ok(sol) = garz::riemann::solve_riemann(&resolved.family, data) else {
        return;
    };
    for xi in [-2.0, -0.5, 0.0, sol.contact_speed, 0.5, 2.0] {
        let (rho, w) = sol.evaluate(xi);
        assert!(rho.is_finite() && w.is_finite());
    }
    let (ru, rw) = sol.average(1.0, -1.0, 1.0);
    assert!(ru.is_finite() && rw.is_finite());
});
