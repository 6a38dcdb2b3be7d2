use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use contractlab::{parse_scalar, ratio};
use contractlab_cli::files::{
    emit_distribution, emit_instance, parse_distribution, parse_instance, to_text,
};

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("contractlab-{name}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn path(&self, file: &str) -> PathBuf {
        self.0.join(file)
    }

    fn write(&self, file: &str, text: &str) -> PathBuf {
        let p = self.path(file);
        fs::write(&p, text).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn contractlab(args: &[&str]) -> Output {
    contractlab_env(args, None)
}

fn contractlab_env(args: &[&str], cap: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_contractlab"));
    cmd.args(args).env_remove("CONTRACTLAB_CAP");
    if let Some(cap) = cap {
        cmd.env("CONTRACTLAB_CAP", cap);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a fixture and its reference equilibrium, returning both paths.
fn fixture(dir: &Scratch, name: &str, param: Option<&str>) -> (PathBuf, PathBuf) {
    let inst = dir.path(&format!("{name}.json"));
    let eq = dir.path(&format!("{name}-eq.json"));
    let mut args = vec![
        "gen",
        "fixture",
        name,
        "--out",
        s(&inst),
        "--equilibrium",
        s(&eq),
    ];
    if let Some(p) = param {
        args.extend(["--param", p]);
    }
    let o = contractlab(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (inst, eq)
}

/// The value printed after `label` on its own line.
fn field<'a>(text: &'a str, label: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.trim_start().strip_prefix(label))
        .unwrap_or_else(|| panic!("no \"{label}\" line in:\n{text}"))
        .trim()
}

fn exact_part(text: &str) -> contractlab::Scalar {
    parse_scalar(text.split_whitespace().next().unwrap()).unwrap()
}

#[test]
fn supermodular_gap_distribution_is_a_cce() {
    let dir = Scratch::new("verify-cce");
    let (inst, eq) = fixture(&dir, "supermodular-gap", None);
    let o = contractlab(&[
        "verify",
        "--instance",
        s(&inst),
        "--distribution",
        s(&eq),
        "--concept",
        "cce",
    ]);
    assert_eq!(code(&o), 0);
    let o = contractlab(&[
        "verify",
        "--instance",
        s(&inst),
        "--distribution",
        s(&eq),
        "--contract",
        "0.925,1/18",
        "--concept",
        "cce",
    ]);
    assert_eq!(code(&o), 0, "decimal shares are read exactly");
}

#[test]
fn empty_profile_at_zero_contract_is_a_pne() {
    let dir = Scratch::new("verify-empty");
    let (inst, _) = fixture(&dir, "separation", None);
    let o = contractlab(&[
        "verify",
        "--instance",
        s(&inst),
        "--profile",
        "",
        "--contract",
        "0,0",
        "--concept",
        "pne",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn separation_point_mass_fails_cce_with_a_witness() {
    let dir = Scratch::new("verify-witness");
    let (inst, _) = fixture(&dir, "separation", None);
    let o = contractlab(&[
        "verify",
        "--instance",
        s(&inst),
        "--profile",
        "0,1",
        "--contract",
        "1/36,1/36",
        "--concept",
        "cce",
    ]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("agent 0 deviates to {}"), "{text}");
    assert_eq!(exact_part(field(&text, "following:")), ratio(41, 9));
    assert_eq!(exact_part(field(&text, "deviating:")), ratio(5, 1));
}

#[test]
fn separation_mne_verifies_for_every_weaker_concept() {
    let dir = Scratch::new("verify-chain");
    let (inst, eq) = fixture(&dir, "separation", None);
    for concept in ["mne", "ce", "cce", "dropout"] {
        let o = contractlab(&[
            "verify",
            "--instance",
            s(&inst),
            "--distribution",
            s(&eq),
            "--concept",
            concept,
        ]);
        assert_eq!(code(&o), 0, "{concept}");
    }
    let o = contractlab(&[
        "verify",
        "--instance",
        s(&inst),
        "--distribution",
        s(&eq),
        "--concept",
        "pne",
    ]);
    assert_eq!(code(&o), 2, "a mixed distribution is not a single profile");
}

#[test]
fn lifting_the_separation_mne() {
    let dir = Scratch::new("lift-sep");
    let (inst, eq) = fixture(&dir, "separation", None);
    let out = dir.path("lifted.json");
    let o = contractlab(&[
        "lift",
        "--instance",
        s(&inst),
        "--distribution",
        s(&eq),
        "--mode",
        "xos",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(field(&text, "case"), "C");
    let r = exact_part(field(&text, "achieved ratio"));
    assert!(r > ratio(94, 100) && r < ratio(95, 100), "{text}");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["case"], "C");
}

#[test]
fn lifting_the_empty_cce_gives_zero() {
    let dir = Scratch::new("lift-empty");
    let (inst, _) = fixture(&dir, "separation", None);
    let d = dir.write(
        "empty.json",
        r#"{"contract": ["0", "0"], "support": [{"profile": [], "prob": "1"}]}"#,
    );
    let o = contractlab(&["lift", "--instance", s(&inst), "--distribution", s(&d)]);
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "principal utility"), "0");
}

#[test]
fn subadditive_lifting_on_the_gap_family() {
    let dir = Scratch::new("lift-sub");
    let (inst, eq) = fixture(&dir, "subadditive-gap", Some("4"));
    let o = contractlab(&[
        "lift",
        "--instance",
        s(&inst),
        "--distribution",
        s(&eq),
        "--mode",
        "subadditive",
    ]);
    assert_eq!(code(&o), 0);
    assert!(exact_part(field(&stdout(&o), "achieved ratio")) >= ratio(1, 560));
}

#[test]
fn robustifying_the_separation_optimum() {
    let dir = Scratch::new("robust-sep");
    let (inst, _) = fixture(&dir, "separation", None);
    let o = contractlab(&[
        "robustify",
        "--instance",
        s(&inst),
        "--contract",
        "1/20,1/20",
        "--profile",
        "0,1",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(field(&text, "contract"), "(7/120, 0)");
    assert_eq!(exact_part(field(&text, "worst cce utility")), ratio(339, 2));
    assert_eq!(exact_part(field(&text, "achieved ratio")), ratio(113, 120));
}

#[test]
fn free_actions_take_the_epsilon_branch() {
    let dir = Scratch::new("robust-free");
    let inst = dir.write(
        "free.json",
        r#"{"agents": [{"id": 0, "actions": [{"id": 0, "cost": "0"}]},
                       {"id": 1, "actions": [{"id": 1, "cost": "0"}]}],
            "reward": {"type": "additive", "values": ["3", "5"]}}"#,
    );
    let o = contractlab(&[
        "robustify",
        "--instance",
        s(&inst),
        "--contract",
        "0,0",
        "--profile",
        "0,1",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(field(&text, "case"), "A");
    assert_eq!(field(&text, "contract"), "(1/4, 1/4)");
}

#[test]
fn gap_report_separates_cce_from_pne() {
    let dir = Scratch::new("gap-sep");
    let (inst, _) = fixture(&dir, "separation", None);
    let json = dir.path("gap.json");
    let o = contractlab(&[
        "gap-report",
        "--instance",
        s(&inst),
        "--resolution",
        "36",
        "--cell",
        "1/36,1/36",
        "--cell",
        "1/20,1/20",
        "--json",
        s(&json),
    ]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    let concepts = doc["concepts"].as_array().unwrap();
    let best = |name: &str| {
        let c = concepts.iter().find(|c| c["concept"] == name).unwrap();
        parse_scalar(c["best"]["principal_utility"].as_str().unwrap()).unwrap()
    };
    assert_eq!(best("best_pne"), ratio(180, 1));
    assert!(best("best_cce") >= ratio(918, 5));
    assert!(best("worst_cce") <= best("best_pne"));
}

#[test]
fn gap_report_on_the_supermodular_gap() {
    let dir = Scratch::new("gap-sm");
    let (inst, _) = fixture(&dir, "supermodular-gap", None);
    let json = dir.path("gap.json");
    let o = contractlab(&[
        "gap-report",
        "--instance",
        s(&inst),
        "--cell",
        "37/40,1/18",
        "--cell",
        "17/18,1/18",
        "--concepts",
        "best_pne,best_cce",
        "--json",
        s(&json),
    ]);
    assert_eq!(code(&o), 0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    let utility = |k: usize| {
        parse_scalar(
            doc["concepts"][k]["best"]["principal_utility"]
                .as_str()
                .unwrap(),
        )
        .unwrap()
    };
    assert_eq!(utility(0), ratio(0, 1));
    assert!(utility(1) > ratio(0, 1));
}

#[test]
fn every_claim_reproduces() {
    let o = contractlab(&["reproduce", "all"]);
    let text = stdout(&o);
    assert_eq!(code(&o), 0, "{text}");
    assert_eq!(
        text.lines().filter(|l| l.starts_with("[match]")).count(),
        12
    );
    assert!(text.contains("A1-mne-183.6: expected 918/5, computed 918/5"));
}

#[test]
fn unknown_claims_and_bad_files_exit_with_two() {
    assert_eq!(code(&contractlab(&["reproduce", "X1-none"])), 2);
    let dir = Scratch::new("bad");
    let inst = dir.write("bad.json", "{\"agents\": [");
    assert_eq!(code(&contractlab(&["classify", "--instance", s(&inst)])), 2);
    let missing = dir.path("missing.json");
    assert_eq!(
        code(&contractlab(&["classify", "--instance", s(&missing)])),
        2
    );
}

#[test]
fn caps_from_the_environment_exit_with_three() {
    let dir = Scratch::new("cap");
    let (inst, _) = fixture(&dir, "separation", None);
    assert_eq!(
        code(&contractlab_env(
            &["classify", "--instance", s(&inst)],
            None
        )),
        0
    );
    assert_eq!(
        code(&contractlab_env(
            &["classify", "--instance", s(&inst)],
            Some("classify_bits=1")
        )),
        3
    );
    assert_eq!(
        code(&contractlab_env(
            &["classify", "--instance", s(&inst)],
            Some("bogus")
        )),
        2
    );
}

#[test]
fn generated_files_round_trip_byte_for_byte() {
    let dir = Scratch::new("round-trip");
    for (name, param) in [
        ("separation", None),
        ("supermodular-gap", None),
        ("subadditive-gap", Some("4")),
    ] {
        let (inst, eq) = fixture(&dir, name, param);
        let text = fs::read_to_string(&inst).unwrap();
        assert_eq!(
            to_text(&emit_instance(&parse_instance(&text).unwrap())),
            text,
            "{name}"
        );
        let text = fs::read_to_string(&eq).unwrap();
        assert_eq!(
            to_text(&emit_distribution(&parse_distribution(&text).unwrap())),
            text,
            "{name}"
        );
    }
    for kind in ["additive", "coverage", "xos", "supermodular", "table"] {
        let args = [
            "gen", "random", "--kind", kind, "--seed", "7", "--sizes", "2,1,2",
        ];
        let first = stdout(&contractlab(&args));
        assert_eq!(
            first,
            stdout(&contractlab(&args)),
            "{kind} is deterministic"
        );
        assert_eq!(
            to_text(&emit_instance(&parse_instance(&first).unwrap())),
            first,
            "{kind}"
        );
    }
}

#[test]
fn random_instances_classify_as_generated() {
    let dir = Scratch::new("classify");
    for (kind, class) in [
        ("additive", "additive"),
        ("coverage", "submodular"),
        ("supermodular", "supermodular"),
    ] {
        let inst = dir.path(&format!("{kind}.json"));
        contractlab(&[
            "gen",
            "random",
            "--kind",
            kind,
            "--seed",
            "3",
            "--sizes",
            "1,1,1,1",
            "--out",
            s(&inst),
        ]);
        let text = stdout(&contractlab(&["classify", "--instance", s(&inst)]));
        assert_eq!(field(&text, class), "yes", "{kind}");
    }
}
