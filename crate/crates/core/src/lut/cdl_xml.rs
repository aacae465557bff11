//! ASC CDL `ColorCorrection` XML export.
//!
//! Slope takes the gain, Offset the lift, Power the reciprocal gamma, and the
//! SatNode the saturation. The fading lift, contrast/pivot and highlight
//! shoulder have no CDL equivalent, so the document says so in a comment and
//! defers to the accompanying `.cube` file.

use crate::cdl::{check_params, CdlParams, InvalidParams};
use crate::scalar::Scalar;

/// Up to six decimals with trailing zeros removed: `1`, `0.5`, `-0.02`.
pub fn fmt_cdl_number(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" || s.is_empty() {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape_attr(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            '\'' => "&apos;".to_string(),
            c if c.is_control() => String::new(),
            c => c.to_string(),
        })
        .collect()
}

pub fn export_cdl_xml<T: Scalar>(params: &CdlParams<T>, id: &str) -> Result<String, InvalidParams> {
    check_params(params)?;
    let p = params.cast::<f64>();
    let triple = |v: [f64; 3]| v.map(fmt_cdl_number).join(" ");
    let power = p.gamma.map(|g| 1.0 / g);
    Ok(format!(
        concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<ColorCorrection id=\"{id}\">\n",
            "    <!-- Lossy export. Not representable in ASC CDL and omitted here: ",
            "highlight-fading lift (offset scaled by 1 - x), contrast {contrast} about pivot {pivot}, ",
            "and the exponential highlight roll-off. The .cube file generated with this ",
            "document is authoritative. -->\n",
            "    <SOPNode>\n",
            "        <Slope>{slope}</Slope>\n",
            "        <Offset>{offset}</Offset>\n",
            "        <Power>{power}</Power>\n",
            "    </SOPNode>\n",
            "    <SatNode>\n",
            "        <Saturation>{sat}</Saturation>\n",
            "    </SatNode>\n",
            "</ColorCorrection>\n"
        ),
        id = escape_attr(id),
        contrast = fmt_cdl_number(p.contrast),
        pivot = fmt_cdl_number(p.pivot),
        slope = triple(p.gain),
        offset = triple(p.lift),
        power = triple(power),
        sat = fmt_cdl_number(p.saturation),
    ))
}
