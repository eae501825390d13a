use std::process::{Command, Output};

fn chronus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronus")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn decode_prints_segments_by_default() {
    let o = chronus(&["decode", "SHOW ME THE FLIGHTS TO BOSTON"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "question:[SHOW ME] subject:[FLIGHT(S)] destin:[TO ((city)BOSTON)]\n");
}

#[test]
fn decode_template_answer_and_sql() {
    let o = chronus(&["decode", "--template", "--answer", "--emit-sql", "SHOW ME THE FLIGHTS FROM BOSTON TO DALLAS"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "(question,display) (subject,flight) (origin,BBOS) (destin,DDFW)");
    assert!(lines[1].starts_with("SELECT"), "{out}");
    assert_eq!(&lines[2..], ["AA\t101\t480\t720", "DL\t202\t1230\t1400"]);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(chronus(&["nonsense"]).status.code(), Some(1));
    assert_eq!(chronus(&["decode", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(chronus(&["gen", "hmm"]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_two() {
    let o = chronus(&["decode", "--model", "/nonexistent/model", "HELLO"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "not a model\n").unwrap();
    assert_eq!(chronus(&["decode", "--model", bad.to_str().unwrap(), "HELLO"]).status.code(), Some(2));
    let corpus = dir.path().join("bad.txt");
    std::fs::write(&corpus, "id\ta\ntext\tHELLO\nafter\tmissing\n").unwrap();
    assert_eq!(chronus(&["eval", "--corpus", corpus.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(chronus(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_reproduces_the_bundled_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo.model");
    let syn = dir.path().join("synonyms.txt");
    std::fs::write(&syn, chronus_core::demo::SYNONYMS).unwrap();
    let o = chronus(&["train", "--synonyms", syn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out).unwrap(), chronus_core::demo::MODEL);
}

#[test]
fn generated_corpus_trains_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let o = chronus(&["gen", "hmm", "--seed", "5", "--train", "300", "--test", "50", "--out", &d("")]);
    assert!(o.status.success());
    for f in ["dictionary.txt", "lexicon.txt", "train.txt", "test.txt", "true.model"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let o = chronus(&[
        "train",
        "--corpus",
        &d("train.txt"),
        "--lexicon",
        &d("lexicon.txt"),
        "--dictionary",
        &d("dictionary.txt"),
        "--out",
        &d("m.model"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = chronus(&[
        "eval",
        "--concepts-only",
        "--model",
        &d("m.model"),
        "--lexicon",
        &d("lexicon.txt"),
        "--corpus",
        &d("test.txt"),
        "--baseline",
        &d("train.txt"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("concept accuracy\t"), "{out}");
    assert!(out.contains("\nunigram baseline\t"), "{out}");
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = chronus(&["gen", "align", "--seed", "9", "--train", "20", "--test", "5", "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("test.txt")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(read(&a).contains("\nwin\t("));
}

#[test]
fn eval_reports_the_demo_corpus() {
    let o = chronus(&["eval"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("sentences\t50\n"), "{out}");
    assert!(out.contains("answers correct\t94.00\t(47)"), "{out}");
}

#[test]
fn loop_reports_convergence() {
    let o = chronus(&["loop"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("iteration\tcorrect\tproblem\tsnapshot\n"), "{out}");
    assert!(out.ends_with("termination\tconverged\n"), "{out}");
}

#[test]
fn repl_reads_stdin() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_chronus"))
        .arg("repl")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"SHOW ME THE FLIGHTS TO BOSTON\n:quit\nIN THE MORNING\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("context\t(question,display) (subject,flight) (destin,BBOS)"), "{text}");
    assert!(!text.contains("morning"), "{text}");
}
