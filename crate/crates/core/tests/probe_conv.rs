use ginnkan::model::ModelKind;
use ginnkan::nn::TrainConfig;
use ginnkan::pinn::{get_problem, solve};

#[test]
#[ignore]
fn conv() {
    let cells = [
        ("lp1", ModelKind::Ginn, 3000),
        ("inviscid_burgers", ModelKind::Kan, 1500),
        ("lp3", ModelKind::Kan, 1500),
        ("lp3", ModelKind::Fc, 1500),
        ("wave", ModelKind::GinnKan, 1000),
        ("wave", ModelKind::Fc, 1000),
    ];
    for (pde, kind, steps) in cells {
        let p = get_problem(pde).unwrap();
        let config = TrainConfig { max_steps: steps, ..TrainConfig::default() };
        let start = std::time::Instant::now();
        match solve(&p, kind, &config) {
            Ok(r) => {
                let h = &r.log.loss_history;
                let probe: Vec<String> = (0..=4).map(|i| format!("{:.2e}", h[(h.len() - 1) * i / 4])).collect();
                println!("{pde}/{kind} {steps} steps {:.0}s: mse {:.3e} holdout {:.3e} loss[{}]",
                    start.elapsed().as_secs_f64(), r.mse, r.mse_holdout, probe.join(" "));
            }
            Err(e) => println!("{pde}/{kind}: FAILED {e}"),
        }
    }
}
