//! Static SVG view of one layer.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Rect;
use crate::layout::{FillKind, Layout, NetClass};
use crate::timing::{classify_critical, CriticalityPolicy};

const STYLE: &str = "\
.die{fill:#fafafa;stroke:#333;stroke-width:0.2%}
.net-signal{fill:#4a7bd0}
.net-critical{fill:#d0473a}
.net-reference{fill:#3a9d5d}
.fill-floating{fill:#b8b8b8}
.fill-shield{fill:#e0a63a}
";

fn rect_elem(out: &mut String, class: &str, r: &Rect, title: Option<&str>) {
    let _ = write!(
        out,
        r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}""#,
        r.x_lo,
        r.y_lo,
        r.width(),
        r.height()
    );
    match title {
        Some(t) => {
            let _ = writeln!(out, "><title>{t}</title></rect>");
        }
        None => out.push_str("/>\n"),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// SVG text for `layer`: the die outline followed by every net shape in
/// layout order and then every fill tile, y axis pointing up.
pub fn render_svg(layout: &Layout, layer: usize) -> Result<String> {
    if layer >= layout.layers.len() {
        return Err(Error::validate("layer exists", format!("layer {layer}")));
    }
    let critical = classify_critical(layout, &CriticalityPolicy::default());
    let die = &layout.die;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" preserveAspectRatio="xMidYMid meet">"#,
        die.x_lo,
        die.y_lo,
        die.width(),
        die.height()
    );
    let _ = writeln!(out, "<style>\n{STYLE}</style>");
    let _ = writeln!(
        out,
        r#"<g transform="matrix(1 0 0 -1 0 {})">"#,
        die.y_lo + die.y_hi
    );
    rect_elem(&mut out, "die", die, None);
    for net in &layout.nets {
        let class = match net.class {
            NetClass::Reference => "net-reference",
            _ if critical.contains(&net.id) => "net-critical",
            _ => "net-signal",
        };
        let title = escape(&net.id);
        for s in net.shapes.iter().filter(|s| s.layer == layer) {
            rect_elem(&mut out, class, &s.rect, Some(&title));
        }
    }
    for f in layout.fills.iter().filter(|f| f.layer == layer) {
        let class = match f.kind {
            FillKind::Floating => "fill-floating",
            FillKind::Shield => "fill-shield",
        };
        rect_elem(&mut out, class, &f.rect, Some(&format!("fill {}", f.id)));
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn write_svg(layout: &Layout, layer: usize, path: &Path) -> Result<()> {
    let text = render_svg(layout, layer)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{DesignRules, FillShape, LayerSpec, Net, Shape};

    fn layout() -> Layout {
        let layers = (0..2)
            .map(|index| LayerSpec {
                index,
                name: format!("M{}", index + 1),
                thickness: 140,
                dielectric_above_t: (index == 0).then_some(200),
                permittivity: 3.453e-17,
                sheet_res: 0.08,
                unit_area_cap: 2e-17,
            })
            .collect();
        Layout {
            die: Rect::new(0, 0, 20_000, 20_000),
            layers,
            rules: DesignRules::default(),
            nets: vec![
                Net {
                    id: "a<b".into(),
                    class: NetClass::Critical,
                    driver_res: Some(100.0),
                    shapes: vec![
                        Shape {
                            layer: 0,
                            rect: Rect::new(0, 0, 5_000, 100),
                        },
                        Shape {
                            layer: 1,
                            rect: Rect::new(0, 0, 100, 5_000),
                        },
                    ],
                    endpoints: Vec::new(),
                },
                Net {
                    id: "VSS".into(),
                    class: NetClass::Reference,
                    driver_res: None,
                    shapes: vec![Shape {
                        layer: 0,
                        rect: Rect::new(0, 1_000, 20_000, 1_400),
                    }],
                    endpoints: Vec::new(),
                },
            ],
            fills: vec![FillShape {
                id: 0,
                layer: 0,
                rect: Rect::square(1_000, 2_000, 400),
                kind: FillKind::Floating,
                shield_group: None,
            }],
        }
    }

    #[test]
    fn one_rect_per_shape_plus_die() {
        let svg = render_svg(&layout(), 0).unwrap();
        assert_eq!(svg.matches("<rect").count(), 4);
        for class in ["net-critical", "net-reference", "fill-floating"] {
            assert_eq!(svg.matches(&format!(r#"<rect class="{class}""#)).count(), 1);
        }
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn empty_layer_has_outline_only() {
        let mut l = layout();
        l.nets[0].shapes.retain(|s| s.layer == 0);
        let svg = render_svg(&l, 1).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains(r#"<rect class="die""#));
    }

    #[test]
    fn deterministic_and_checked() {
        assert_eq!(
            render_svg(&layout(), 0).unwrap(),
            render_svg(&layout(), 0).unwrap()
        );
        assert_eq!(render_svg(&layout(), 2).unwrap_err().code(), "E_VALIDATE");
        let err = write_svg(&layout(), 0, Path::new("/nonexistent/dir/x.svg")).unwrap_err();
        assert_eq!(err.code(), "E_IO");
    }
}
