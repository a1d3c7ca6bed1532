use std::path::Path;
use std::process::Command;

use mixgm_cli::model_file::ModelFile;

/// Runs the binary in `dir` and returns stdout and stderr.
fn mixgm(dir: &Path, args: &[&str]) -> (String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mixgm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "mixgm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn sampled(dir: &Path) {
    mixgm(
        dir,
        &[
            "sample", "--ladder", "3,3", "--n", "150", "--seed", "2", "--output", "d.csv",
        ],
    );
}

const DATA: [&str; 4] = ["--input", "d.csv", "--categorical", "y1,y2,y3"];

#[test]
fn ingest_reports_schema_and_writes_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("toy.csv"),
        "height,color,weight\n1.5,red,3\n2.5,blue,4\n0.5,red,6\n",
    )
    .unwrap();
    let args = [
        "ingest",
        "--input",
        "toy.csv",
        "--categorical",
        "color",
        "--dictionary-out",
        "dict.json",
    ];
    let (codes, summary) = mixgm(dir.path(), &args);
    assert!(codes.starts_with("height,weight,color\n1.5,3,1\n"), "{codes}");
    assert!(summary.contains("n = 3"), "{summary}");
    assert!(summary.contains("continuous = 2"), "{summary}");
    let dict = read(dir.path(), "dict.json");
    assert!(dict.contains("\"red\"") && dict.contains("\"blue\""));
}

#[test]
fn fit_writes_model_and_edges() {
    let dir = tempfile::tempdir().unwrap();
    sampled(dir.path());
    let mut args = vec!["fit"];
    args.extend(DATA);
    args.extend(["--lambda", "0.2", "--output", "m.json", "--edges", "e.csv"]);
    mixgm(dir.path(), &args);
    let model = ModelFile::load(&dir.path().join("m.json")).unwrap();
    assert_eq!(model.dictionary.names().len(), 6);
    assert_eq!(model.penalty.as_ref().unwrap().lambda, 0.2);
    assert!(model.theta().is_ok());
    let edges = read(dir.path(), "e.csv");
    assert!(edges.starts_with("kind,a,b,weight,norm"));
    assert!(edges.lines().count() > 1);
}

#[test]
fn lambda_max_only_prints_a_number() {
    let dir = tempfile::tempdir().unwrap();
    sampled(dir.path());
    let mut args = vec!["fit"];
    args.extend(DATA);
    args.push("--lambda-max-only");
    let lmax: f64 = mixgm(dir.path(), &args).0.trim().parse().unwrap();
    assert!(lmax > 0.0);

    let above = format!("{}", 1.01 * lmax);
    let mut args = vec!["fit"];
    args.extend(DATA);
    args.extend(["--lambda", &above]);
    let (_, summary) = mixgm(dir.path(), &args);
    assert!(summary.contains("edges = 0"), "{summary}");
}

#[test]
fn path_has_default_grid_length() {
    let dir = tempfile::tempdir().unwrap();
    sampled(dir.path());
    let mut args = vec!["path"];
    args.extend(DATA);
    args.extend(["--output", "p.csv"]);
    mixgm(dir.path(), &args);
    let text = read(dir.path(), "p.csv");
    assert_eq!(text.lines().count(), 51);
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')), "a grid point failed");
}

#[test]
fn seeded_commands_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sample = |out: &str| {
        mixgm(
            dir.path(),
            &["sample", "--ladder", "2,2", "--n", "50", "--seed", "9", "--output", out],
        )
    };
    sample("a.csv");
    sample("b.csv");
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));

    let phase = |out: &str| {
        let args = [
            "phase-transition",
            "--p",
            "2",
            "--q",
            "2",
            "--sample-sizes",
            "50,200",
            "--trials",
            "3",
            "--output",
            out,
        ];
        mixgm(dir.path(), &args)
    };
    phase("a.json");
    phase("b.json");
    let a = read(dir.path(), "a.json");
    assert_eq!(a, read(dir.path(), "b.json"));
    let rows: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}

#[test]
fn compare_reports_per_variable_losses() {
    let dir = tempfile::tempdir().unwrap();
    sampled(dir.path());
    let mut args = vec!["compare"];
    args.extend(DATA);
    args.extend(["--grid-points", "4", "--output", "c.csv"]);
    mixgm(dir.path(), &args);
    let text = read(dir.path(), "c.csv");
    let header = text.lines().next().unwrap();
    for col in ["pl_loss", "likelihood_loss", "loss_x1", "loss_y3"] {
        assert!(header.contains(col), "{header}");
    }
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}
