use std::process::Command;

use encdec::clifford::CliffordTableau;
use encdec::decoder::{decode_oracle, resolve_target, Decoder, ErrorModel};
use encdec::harness::{encoder_rng, mean_stderr, read_csv, run, write_outputs, ExperimentConfig, Metric, Protocol};
use encdec::theory::Ensemble;

fn cfg(protocol: Protocol, ns: &[usize], reals: usize, metrics: &[Metric]) -> ExperimentConfig {
    ExperimentConfig {
        ensemble: Ensemble::Clifford,
        protocol,
        n_list: ns.to_vec(),
        rate: 0.5,
        alpha_grid: vec![0.3, 0.9, 1.6],
        realizations: reals,
        seed: 99,
        metrics: metrics.to_vec(),
        output: None,
        threads: Some(2),
    }
}

/// Born-weighted fidelity of one encoder, from the dense reference decoder.
fn oracle_born_fidelity(t: &CliffordTableau, k: usize, em: &ErrorModel) -> f64 {
    let n = t.n();
    let dec = Decoder::new(t, k).unwrap();
    let mut total = 0.0;
    for s in 0..1u64 << (n - k) {
        let st = decode_oracle(t.z_images(), k, s, em).unwrap();
        if st.is_zero_branch() {
            continue;
        }
        let target = if s == 0 {
            0
        } else {
            let set = dec.solutions(s).unwrap().unwrap();
            resolve_target(&st.amplitudes, &set.min_weight_targets().1) as usize
        };
        total += st.born_prob * st.fidelity(target).unwrap();
    }
    total
}

#[test]
fn exhaustive_born_matches_oracle_sum() {
    for n in [4, 6, 8, 10] {
        let c = cfg(Protocol::Born { draws: 0 }, &[n], 1, &[Metric::Fidelity]);
        let recs = run(&c).unwrap();
        let t = CliffordTableau::sample(n, &mut encoder_rng(c.seed, n, 0));
        for (r, &a) in recs.iter().zip(&c.alpha_grid) {
            let want = oracle_born_fidelity(&t, n / 2, &ErrorModel::new(a));
            assert!((r.mean - want).abs() < 1e-10, "N={n} a={a}: {} vs {want}", r.mean);
        }
    }
}

#[test]
fn forced_realization_matches_oracle() {
    let n = 10;
    let c = cfg(Protocol::Forced { syndrome: 0 }, &[n], 1, &[Metric::Fidelity, Metric::BornProb]);
    let recs = run(&c).unwrap();
    let t = CliffordTableau::sample(n, &mut encoder_rng(c.seed, n, 0));
    for (i, &a) in c.alpha_grid.iter().enumerate() {
        let st = decode_oracle(t.z_images(), n / 2, 0, &ErrorModel::new(a)).unwrap();
        assert!((recs[2 * i].mean - st.fidelity(0).unwrap()).abs() < 1e-12);
        assert!((recs[2 * i + 1].mean - st.born_prob).abs() < 1e-12);
    }
}

#[test]
fn doubling_realizations_shrinks_stderr() {
    let small = run(&cfg(Protocol::Forced { syndrome: 0 }, &[12], 400, &[Metric::Fidelity])).unwrap();
    let large = run(&cfg(Protocol::Forced { syndrome: 0 }, &[12], 1600, &[Metric::Fidelity])).unwrap();
    for (a, b) in small.iter().zip(&large) {
        let ratio = a.stderr / b.stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "a={}: ratio {ratio}", a.alpha);
    }
}

#[test]
fn stderr_is_sample_sd_over_sqrt_count() {
    let v = [0.2, 0.4, 0.9, 1.3];
    let (m, e) = mean_stderr(&v);
    let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 3.0).sqrt();
    assert!((e - sd / 2.0).abs() < 1e-15);
}

#[test]
fn csv_roundtrip_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let c = cfg(Protocol::Class { ell: 1 }, &[8], 20, &[Metric::Fidelity, Metric::Sre(2)]);
    let recs = run(&c).unwrap();
    write_outputs(&c, &recs, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), recs);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
    let back = ExperimentConfig::from_kv(side["config"].as_str().unwrap()).unwrap();
    assert_eq!(back.n_list, c.n_list);
    assert_eq!(back.protocol, c.protocol);
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_encdec")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_exit_codes() {
    let (code, out) = cli(&["run-forced", "--seed", "1", "--n-list", "6", "--alphas", "0.5", "--realizations", "8"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("ensemble,protocol,N,k,alpha,metric,mean,stderr,count,seed\nclifford,forced:0,6,3,0.5,fidelity,"));
    // SRE on k = 20 is over budget
    assert_eq!(cli(&["run-forced", "--seed", "1", "--n-list", "40", "--alphas", "0.5", "--metrics", "sre2"]).0, 2);
    assert_eq!(cli(&["run-haar", "--seed", "1", "--n-list", "24", "--alphas", "0.5"]).0, 2);
    // k = round(0.01 * 8) = 0
    assert_eq!(cli(&["run-class", "--seed", "1", "--n-list", "8", "--rate", "0.01", "--alphas", "0.5"]).0, 3);
    assert_eq!(cli(&["run-forced", "--n-list", "8", "--alphas", "0.5"]).0, 3);
    assert_eq!(cli(&["run-forced", "--seed", "1", "--n-list", "8", "--alphas", "4.0"]).0, 3);
    let (code, out) = cli(&["theory-eval", "--formula", "alpha_c", "--n", "8", "--k", "4", "--alphas", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("alpha_c,8,4,0,1.1437"));
    let (code, out) = cli(&["commutant-gen", "--replicas", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"total\": 30"));
}

#[test]
fn cli_config_file_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.txt");
    let csv = dir.path().join("exp.csv");
    std::fs::write(
        &conf,
        format!(
            "ensemble = clifford\nprotocol = forced\nn_list = 8,12,16\nalpha_grid = lin:0.2:2.2:21\nrealizations = 200\nseed = 5\noutput = {}\n",
            csv.display()
        ),
    )
    .unwrap();
    assert_eq!(cli(&["run-forced", "--config", conf.to_str().unwrap()]).0, 0);
    let first = std::fs::read(&csv).unwrap();
    assert_eq!(cli(&["run-forced", "--config", conf.to_str().unwrap(), "--threads", "1"]).0, 0);
    assert_eq!(std::fs::read(&csv).unwrap(), first);
    let (code, out) = cli(&["analyze", "--input", csv.to_str().unwrap(), "--level", "0.5"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["crossings"].as_array().unwrap().len(), 2);
    let xc = report["fit"]["x_c"].as_f64().unwrap();
    assert!((0.9..1.4).contains(&xc), "{xc}");
}
