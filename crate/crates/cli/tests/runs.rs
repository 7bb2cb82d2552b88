use std::path::Path;
use std::process::Command;

use widomlab_cli::config::ExperimentConfig;
use widomlab_cli::{run, Cache};

const LEMMA: &str = "[experiment]\nkind = lemma51\nseed = 9\n[numerics]\nlength = 6\ntrials = 24\n[output]\ntiming = off\n";

const MC: &str = "\
[experiment]
kind = traceF
seed = 4
[domain]
omega = box half=1
gamma = box half=1
[symbol]
function = monomial 3
[grid]
r = 2,3,5
[numerics]
method = mc
samples = 20000
[output]
timing = off
";

const TRACE2: &str = "\
[experiment]
kind = trace2
[domain]
omega = box half=1
gamma = box half=1
[grid]
r = 10:100:log:5
[numerics]
method = nystrom
[output]
timing = off
";

fn json(cfg: &str, cache: Option<&Cache>) -> String {
    let cfg = ExperimentConfig::parse(cfg).unwrap();
    run(&cfg, cache).unwrap().to_json().unwrap()
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    assert_eq!(json(MC, None), json(MC, None));
    let other = MC.replace("seed = 4", "seed = 5");
    assert_ne!(json(MC, None), json(&other, None));
}

#[test]
fn thread_count_does_not_change_results() {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    assert_eq!(
        one.install(|| json(MC, None)),
        four.install(|| json(MC, None))
    );
}

#[test]
fn cached_and_uncached_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [LEMMA, MC, TRACE2] {
        let fresh = json(cfg, None);
        let cache = Cache::open(dir.path()).unwrap();
        let filling = json(cfg, Some(&cache));
        let reopened = Cache::open(dir.path()).unwrap();
        let hit = json(cfg, Some(&reopened));
        assert_eq!(fresh, filling);
        assert_eq!(fresh, hit);
    }
}

#[test]
fn grid_change_reuses_shared_points() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::open(dir.path()).unwrap();
    json(MC, Some(&cache));
    let n = cache.len();
    json(&MC.replace("r = 2,3,5", "r = 2,3,5,7"), Some(&cache));
    assert_eq!(cache.len(), n + 1);
}

#[test]
fn lemma_and_trace_targets_pass() {
    let cfg = ExperimentConfig::parse(TRACE2).unwrap();
    let rep = run(&cfg, None).unwrap();
    assert!(rep.pass, "{:?}", rep.targets);
    assert_eq!(rep.fits.len(), 1);
    let rep = run(&ExperimentConfig::parse(LEMMA).unwrap(), None).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.rows.len(), 24);
}

#[test]
fn interval_square_trace_log_coefficient() {
    let cfg = ExperimentConfig::parse(
        "[experiment]\nkind = trace2\n[domain]\nomega = box lower=-1 upper=1\ngamma = box lower=-1 upper=1\n[grid]\nr = 25:800:log:8\n",
    )
    .unwrap();
    let rep = run(&cfg, None).unwrap();
    let b = rep.fits[0].fit.log_coefficient;
    let expected = -1.0 / std::f64::consts::PI.powi(2);
    assert!((b - expected).abs() < 1e-3 * expected.abs(), "b = {b}");
    assert!(rep.pass);
    assert!(rep.rows.iter().all(|r| r.method == "overlap"));
}

#[test]
fn lemma_identity_verdict_over_hundred_trials() {
    let cfg = ExperimentConfig::parse(
        "[experiment]\nkind = lemma51\n[numerics]\nlength = 6\ntrials = 100\n",
    )
    .unwrap();
    let rep = run(&cfg, None).unwrap();
    assert_eq!(rep.rows.len(), 100);
    assert!(rep.pass);
    assert!(rep.rows.iter().all(|r| r.value <= 1e-10));
}

#[test]
fn reruns_through_the_cache_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let decay = "[experiment]\nkind = gamma-decay\n[domain]\ngamma = ball center=0,0 radius=1\n[grid]\nv = 10:400:log:6\n";
    for text in [decay, MC] {
        let cfg = ExperimentConfig::parse(&text.replace("timing = off", "timing = on")).unwrap();
        let csv = |cache: &Cache| {
            let mut buf = Vec::new();
            run(&cfg, Some(cache)).unwrap().write_csv(&mut buf).unwrap();
            buf
        };
        let first = csv(&Cache::open(dir.path()).unwrap());
        let second = csv(&Cache::open(dir.path()).unwrap());
        assert_eq!(first, second);
    }
    // a different grid is a different whole-run record
    let cache = Cache::open(dir.path()).unwrap();
    let n = cache.len();
    let other = ExperimentConfig::parse(&decay.replace("10:400:log:6", "10:400:log:7")).unwrap();
    run(&other, Some(&cache)).unwrap();
    assert_eq!(cache.len(), n + 1);
}

fn widomlab(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_widomlab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env("WIDOMLAB_CACHE_DIR", out.join("cache-env"))
        .output()
        .unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[test]
fn exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let fit = "[experiment]\nkind = fit\n[grid]\nr = 10,20,40,80,160\n[fit]\nvalues = 1,2,3,4,5\ntarget = ";
    let pass = write("pass.conf", &format!("{fit}1.442695\n"));
    let fail = write("fail.conf", &format!("{fit}3\n"));
    let broken = write(
        "broken.conf",
        "[experiment]\nkind = fit\n[fit]\nvalue = 1\n",
    );

    let out = dir.path().join("out");
    let (code, _) = widomlab(&["fit", "--config", &pass], &out);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("fit.csv")).unwrap();
    assert!(csv.starts_with("R,value,method,stderr,wall_ms\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(
        json["rows"].as_array().unwrap().len(),
        csv.lines().count() - 1
    );
    assert_eq!(json["targets"][0]["status"], "conjectural");

    assert_eq!(widomlab(&["fit", "--config", &fail], &out).0, 2);
    let (code, err) = widomlab(&["fit", "--config", &broken], &out);
    assert_eq!(code, 1);
    assert!(err.contains("fit.value"), "{err}");
    assert_eq!(widomlab(&["lemma51", "--config", &pass], &out).0, 1);
    assert_eq!(
        widomlab(&["fit", "--config", "/nonexistent.conf"], &out).0,
        1
    );
    assert_eq!(widomlab(&["fit"], &out).0, 1);
}

#[test]
fn cache_directory_follows_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("l.conf");
    std::fs::write(&cfg, LEMMA).unwrap();
    let out = dir.path().join("out");
    let (code, _) = widomlab(
        &[
            "lemma51",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "2",
            "--jobs",
            "2",
        ],
        &out,
    );
    assert_eq!(code, 0);
    assert!(out.join("cache-env").join("records.log").exists());
    assert!(!out.join("cache").exists());
    let first = std::fs::read(out.join("lemma51.json")).unwrap();
    let (code, _) = widomlab(
        &[
            "lemma51",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "2",
            "--no-cache",
        ],
        &out,
    );
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(out.join("lemma51.json")).unwrap(), first);
}
