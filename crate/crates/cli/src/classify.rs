use num_traits::Zero;
use serde_json::{json, Value};

use nilpotent_atlas::charts::{classify_finite_singularities, localize_at_infinity, normal_form_params, BBox};
use nilpotent_atlas::field::{quadratic_from_params, QuadraticParams};
use nilpotent_atlas::poly::{rat, rat_to_f64};
use nilpotent_atlas::verify::{invariant_parabola, is_integrable_case, pprime_closed_form};
use nilpotent_atlas::AtlasError;

use crate::config::{Format, RunConfig};
use crate::error::CliResult;
use crate::output::{json_report, Artifact};

fn exact(q: &num_rational::BigRational) -> Value {
    json!({ "exact": q.to_string(), "value": rat_to_f64(q) })
}

pub fn run(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    cfg.require_format(&[Format::Json])?;
    let b = cfg.b_rat();
    if b.is_zero() || b == rat(1, 2) {
        return Err(AtlasError::ExcludedB(b.to_string()).into());
    }
    let q = QuadraticParams::new(cfg.delta_rat(), cfg.gamma_rat(), b.clone());
    let nf = normal_form_params(&q)?;
    let f = quadratic_from_params(&q);
    let chart = localize_at_infinity(&f)?;
    let codimension = if nf.b.is_zero() { 4 } else { 3 };

    let (parabola, gamma_on) = invariant_parabola(&b, &q.delta)?;
    let on_parabola = gamma_on == q.gamma;
    let parabola_json = if on_parabola {
        let pprime = match pprime_closed_form(q.b_f64(), q.delta_f64()) {
            Ok(v) => json!(v),
            Err(e) => json!(e.to_string()),
        };
        json!({ "invariant": true, "coefficients": parabola.to_json(), "pprime_at_zero": pprime })
    } else {
        json!({ "invariant": false, "gamma_required": gamma_on.to_string() })
    };

    let singular: Vec<Value> = classify_finite_singularities(&f, &BBox::square(cfg.bbox))?
        .iter()
        .map(|s| {
            json!({
                "point": s.point,
                "kind": s.kind,
                "trace": s.trace,
                "det": s.det,
                "eigenvalues": s.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            })
        })
        .collect();

    let body = json!({
        "field": f.to_json(),
        "normal_form": { "a": exact(&nf.a), "b": exact(&nf.b), "eta": exact(&nf.eta) },
        "eta_nonzero": !nf.eta.is_zero(),
        "codimension": codimension,
        "summary": format!("nilpotent saddle of codimension {codimension}"),
        "infinity_chart": {
            "field": chart.field.to_json(),
            "multiplicity": chart.multiplicity(),
            "triple": chart.is_triple(),
        },
        "parabola": parabola_json,
        "integrable": is_integrable_case(&q),
        "finite_singularities": singular,
    });
    Ok(vec![Artifact::new("classify", Format::Json, json_report(cfg, body))])
}
