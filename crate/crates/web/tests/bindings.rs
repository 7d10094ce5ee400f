use skipflow_web::{analyze_json, compare_json, dot_text, example, methods_json};

#[test]
fn analyze_jdk_example() {
    let v: serde_json::Value = serde_json::from_str(&analyze_json(&example("jdk"), "skipflow").unwrap()).unwrap();
    let reachable: Vec<&str> = v["reachable"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    assert!(!reachable.contains(&"Set.remove"));
    assert!(v["flows"].as_array().unwrap().iter().any(|f| f["enabled"] == false));
}

#[test]
fn compare_sunflow_example() {
    let v: serde_json::Value = serde_json::from_str(&compare_json(&example("sunflow")).unwrap()).unwrap();
    let pruned: Vec<&str> = v["pruned"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    assert!(pruned.contains(&"FrameDisplay.imageBegin"));
}

#[test]
fn dot_and_methods() {
    let src = example("loop");
    let names: Vec<String> = serde_json::from_str(&methods_json(&src).unwrap()).unwrap();
    assert_eq!(names, ["Main.main"]);
    assert!(dot_text(&src, "Main.main", "baseline").unwrap().starts_with("digraph"));
    assert!(dot_text(&src, "Main.nope", "skipflow").unwrap_err().contains("unknown method"));
}

#[test]
fn errors_are_positioned() {
    let err = analyze_json("type Object {\n  field", "skipflow").unwrap_err();
    assert!(err.starts_with("input.sfir:2:"), "{err}");
    assert!(analyze_json(&example("jdk"), "fast").unwrap_err().contains("unknown mode"));
}
