use dpo::fock::steady_state_adaptive;
use dpo::model::DpoParams;
use dpo::analytic::cavity_moments_ss;
use std::time::Instant;

fn main() {
    for (e, r) in [(0.1, 0.0), (0.3, 0.0), (0.2, 0.75), (0.3, 0.5), (0.3, 0.75)] {
        let p = DpoParams::new(0.8, e, r).unwrap();
        let t0 = Instant::now();
        let st = steady_state_adaptive(&p).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let want = cavity_moments_ss(&p).unwrap();
        let n = st.rho.mean_photon();
        let m = st.rho.anomalous().re;
        println!(
            "e={e} r={r}: dim={} dt_used={:.5} t={:.1} steps={} resid={:.2e} top={:.2e} wall={dt:.1}s  n: {:.6e} vs {:.6e} (rel {:.1e})  m rel {:.1e}",
            st.rho.dim, st.dt_used, st.t_reached, st.steps, st.residual, st.top_occupation, n, want.mean_photon,
            ((n - want.mean_photon) / want.mean_photon).abs(),
            ((m - want.anomalous) / want.anomalous).abs()
        );
    }
}
