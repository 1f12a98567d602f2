//! Outline plots in absolute pixel coordinates.

use std::fmt::Write;

use fce_core::numfmt::fmt_num;
use fce_core::Point2;

pub const GT_COLOR: &str = "green";
pub const PRED_COLOR: &str = "red";

pub struct Layer<'a> {
    pub color: &'static str,
    pub dashed: bool,
    pub outlines: Vec<&'a [Point2]>,
}

pub fn render(width: u32, height: u32, layers: &[Layer]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    for layer in layers {
        let dash = if layer.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        for pts in &layer.outlines {
            let coords: Vec<String> = pts
                .iter()
                .map(|p| format!("{},{}", fmt_num(p.x), fmt_num(p.y)))
                .collect();
            writeln!(
                s,
                r#"  <polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                coords.join(" "),
                layer.color
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}
