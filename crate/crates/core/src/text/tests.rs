use super::*;
use crate::ir::Rule;

const MINIMAL: &str = "type Object {} method Object.main() { b0: start() v0 = 0 return v0 }";
const JDK: &str = include_str!("../../corpus/jdk_onexit.sfir");
const SUNFLOW: &str = include_str!("../../corpus/sunflow_display.sfir");
const LOOP: &str = include_str!("../../corpus/counting_loop.sfir");

fn parse(src: &str) -> Result<Program, TextError> {
    parse_program(&SourceFile::new("test.sfir", src))
}

#[test]
fn minimal_program() {
    let p = parse(MINIMAL).unwrap();
    assert_eq!(p.types().len(), 1);
    assert_eq!(p.methods().len(), 1);
    assert_eq!(p.methods()[0].qualified_name(), "Object.main");
}

#[test]
fn corpora_parse_and_validate() {
    for src in [JDK, SUNFLOW, LOOP] {
        let p = parse(src).unwrap();
        assert!(!p.roots().is_empty());
    }
    let p = parse(JDK).unwrap();
    let is_virtual = p.method(p.method_id("Thread", "isVirtual").unwrap());
    assert!(matches!(
        &is_virtual.blocks[0].end,
        crate::ir::BlockEnd::If { cond: crate::ir::Cond::InstanceOf(v, t), .. }
            if v == "this" && t == "BaseVirtualThread"
    ));
}

#[test]
fn missing_instanceof_type_points_past_the_keyword() {
    let src = "type Object {}\nmethod Object.main(v0) {\n  b0: start(v0)\n    if v0 instanceof then a else b\n}";
    let err = parse(src).unwrap_err();
    let TextError::Syntax { err, .. } = err else {
        panic!("expected a syntax error, got {err:?}");
    };
    // `then` starts at column 22 of line 4.
    assert_eq!(err.pos, Pos { line: 4, col: 22 });
    assert!(err.message.contains("type name"), "{}", err.message);
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse("type Object {\n  field : int\n}").unwrap_err();
    assert!(err.to_string().starts_with("test.sfir:2:9:"), "{err}");
    let err = parse("type Object {} method Object.m() { b0: start() v = 99999999999999999999 return v }")
        .unwrap_err();
    assert!(err.to_string().contains("out of 64-bit range"), "{err}");
    let err = parse("type Object {} method Object.m(a) { b0: start(b) return b }").unwrap_err();
    assert!(err.to_string().contains("differ from the method header"), "{err}");
    let err = parse("type type {}").unwrap_err();
    assert!(err.to_string().contains("keyword `type`"), "{err}");
}

#[test]
fn violations_become_positioned_diagnostics() {
    let src = "type Object {}\nmethod Object.m() {\n  b0: start()\n    z = 0\n    jump b1\n  b1: label\n    return z\n}";
    let TextError::Invalid { diagnostics, .. } = parse(src).unwrap_err() else {
        panic!("expected validation errors");
    };
    let d = diagnostics
        .iter()
        .find(|d| d.violation.rule == Rule::LabelPredecessor)
        .expect("label predecessor violation");
    assert_eq!(d.pos, Pos { line: 6, col: 3 });
}

#[test]
fn instanceof_null_is_rejected_by_validation() {
    let src = "type Object {} method Object.m(x) { b0: start(x) if x instanceof null then a else b \
               a: label jump c b: label jump c c: merge return x }";
    let TextError::Invalid { diagnostics, .. } = parse(src).unwrap_err() else {
        panic!("expected validation errors");
    };
    assert!(diagnostics.iter().any(|d| d.violation.rule == Rule::InstanceofNull));
}

#[test]
fn canonical_print_is_a_fixed_point() {
    let p = parse(MINIMAL).unwrap();
    let once = print_program(&p);
    let again = print_program(&parse(&once).unwrap());
    assert_eq!(once, again);
}

#[test]
fn corpora_round_trip() {
    for src in [JDK, SUNFLOW, LOOP] {
        let p = parse(src).unwrap();
        let back = parse(&print_program(&p)).unwrap();
        assert_eq!(p, back);
    }
}

#[test]
fn full_construct_coverage_round_trips() {
    let src = r#"
type Object {}
type A extends Object { field x : int field r : A }
type B extends A {}
root A.main
method A.main(this) {
  b0: start(this)
    i = 7
    n = -3
    a = any
    o = new B
    z = null
    o.x = i
    o.r = z
    l = o.x
    c = o.get(i, n)
    if a < i then t1 else e1
  t1: label
    jump m1
  e1: label
    jump m1
  m1: merge [p = phi(i, n), q = phi(n, i)]
    if o instanceof B then t2 else e2
  t2: label
    jump m2
  e2: label
    jump m2
  m2: merge
    if p == q then t3 else e3
  t3: label
    jump m3
  e3: label
    jump m3
  m3: merge
    return l
}
method A.get(this, u, w) {
  b0: start(this, u, w)
    return u
}
"#;
    let p = parse(src).unwrap();
    let printed = print_program(&p);
    let back = parse(&printed).unwrap();
    assert_eq!(p, back);
    assert_eq!(printed, print_program(&back));
    assert!(printed.contains("merge [p = phi(i, n), q = phi(n, i)]"));
}
