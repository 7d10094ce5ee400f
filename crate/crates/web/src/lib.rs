//! Browser bindings for the demo page. Each export takes program text and
//! returns a string (JSON or DOT); errors surface as JS exceptions carrying
//! the positioned diagnostic.

use skipflow_core::ir::{MethodRef, Program};
use skipflow_core::pvpg::{render_dot, DotScope};
use skipflow_core::report::{Comparison, Report};
use skipflow_core::solver::{analyze, Config, Mode};
use skipflow_core::text::{parse_program, SourceFile};
use wasm_bindgen::prelude::*;

fn load(source: &str) -> Result<Program, String> {
    parse_program(&SourceFile::new("input.sfir", source)).map_err(|e| e.to_string())
}

fn mode(name: &str) -> Result<Mode, String> {
    match name {
        "skipflow" => Ok(Mode::SkipFlow),
        "baseline" => Ok(Mode::Baseline),
        other => Err(format!("unknown mode `{other}`")),
    }
}

/// Report with per-flow states, as JSON.
pub fn analyze_json(source: &str, mode_name: &str) -> Result<String, String> {
    let p = load(source)?;
    let config = Config {
        mode: mode(mode_name)?,
        ..Config::default()
    };
    let r = analyze(&p, &config).map_err(|e| e.to_string())?;
    Ok(Report::new(&r, &p).with_flows(&r, &p).to_json())
}

pub fn compare_json(source: &str) -> Result<String, String> {
    let p = load(source)?;
    let sf = analyze(&p, &Config::skipflow()).map_err(|e| e.to_string())?;
    let base = analyze(&p, &Config::baseline()).map_err(|e| e.to_string())?;
    Ok(Comparison::new(&sf, &base, &p).to_json())
}

/// DOT for `method` (`Owner.name`) or `all` after the chosen analysis.
pub fn dot_text(source: &str, method: &str, mode_name: &str) -> Result<String, String> {
    let p = load(source)?;
    let scope = if method == "all" {
        DotScope::All
    } else {
        let id = method
            .parse::<MethodRef>()
            .ok()
            .and_then(|r| p.method_by_ref(&r))
            .ok_or_else(|| format!("unknown method `{method}`"))?;
        DotScope::Method(id)
    };
    let config = Config {
        mode: mode(mode_name)?,
        ..Config::default()
    };
    let r = analyze(&p, &config).map_err(|e| e.to_string())?;
    Ok(render_dot(&r.graph, &p, scope, &r.enabled, &r.vs))
}

/// Method names in declaration order, as a JSON array.
pub fn methods_json(source: &str) -> Result<String, String> {
    let p = load(source)?;
    let names: Vec<String> = p.methods().iter().map(|m| m.qualified_name()).collect();
    Ok(serde_json::to_string(&names).expect("names serialize"))
}

#[wasm_bindgen]
pub fn analyze_program(source: &str, mode: &str) -> Result<String, JsError> {
    analyze_json(source, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_program(source: &str) -> Result<String, JsError> {
    compare_json(source).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dot_program(source: &str, method: &str, mode: &str) -> Result<String, JsError> {
    dot_text(source, method, mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn list_methods(source: &str) -> Result<String, JsError> {
    methods_json(source).map_err(|e| JsError::new(&e))
}

/// The demo's preloaded examples.
#[wasm_bindgen]
pub fn example(name: &str) -> String {
    match name {
        "sunflow" => include_str!("../../core/corpus/sunflow_display.sfir"),
        "loop" => include_str!("../../core/corpus/counting_loop.sfir"),
        _ => include_str!("../../core/corpus/jdk_onexit.sfir"),
    }
    .to_string()
}
