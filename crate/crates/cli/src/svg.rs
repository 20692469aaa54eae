//! Deterministic SVG snapshots of arm shapes.
//!
//! Coordinates are printed with a fixed number of decimals so identical
//! inputs always produce identical bytes.

use std::fmt::Write as _;

use octoarm_core::{Circle, Configuration, Point, RodError, RodModel};

/// World window mapped onto the canvas. The y axis points up in the world
/// and down on the canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Canvas {
    pub x_min: f64,
    pub y_max: f64,
    pub width_m: f64,
    pub height_m: f64,
    /// Pixels per metre.
    pub scale: f64,
}

impl Default for Canvas {
    fn default() -> Self {
        Self {
            x_min: -0.05,
            y_max: 0.22,
            width_m: 0.30,
            height_m: 0.37,
            scale: 2000.0,
        }
    }
}

impl Canvas {
    pub fn to_px(&self, p: Point) -> (f64, f64) {
        (
            (p.x - self.x_min) * self.scale,
            (self.y_max - p.y) * self.scale,
        )
    }

    fn size(&self) -> (f64, f64) {
        (self.width_m * self.scale, self.height_m * self.scale)
    }
}

/// One arm outline to draw.
#[derive(Debug, Clone)]
pub struct ArmShape<'a> {
    pub configuration: &'a Configuration,
    pub color: &'a str,
    pub opacity: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Scene<'a> {
    pub arms: Vec<ArmShape<'a>>,
    /// Objects and obstacles, drawn at their true radius.
    pub circles: Vec<Circle>,
    /// Reaching targets, drawn as small crosses.
    pub targets: Vec<Point>,
    pub title: String,
}

/// Closed outline of the tapered arm: the `+b` side from base to tip, then
/// the `−b` side back to the base.
pub fn arm_outline(model: &RodModel, config: &Configuration) -> Result<Vec<Point>, RodError> {
    let n = config.n_nodes();
    let ds = model.rest_length / (n - 1) as f64;
    let mut upper = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let radius = model.radius_at((i as f64 * ds).min(model.rest_length))?;
        let th = config.angles[i];
        let normal = Point::new(-th.sin(), th.cos());
        upper.push(config.positions[i] + radius * normal);
        lower.push(config.positions[i] - radius * normal);
    }
    lower.reverse();
    upper.extend(lower);
    Ok(upper)
}

pub fn render_svg(
    model: &RodModel,
    scene: &Scene<'_>,
    canvas: &Canvas,
) -> Result<String, RodError> {
    let (w, h) = canvas.size();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(
        out,
        "<!-- canvas transform: px = (x - ({:.4})) * {:.1}, py = ({:.4} - y) * {:.1}; x, y in metres -->",
        canvas.x_min, canvas.scale, canvas.y_max, canvas.scale
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&scene.title));
    let _ = writeln!(
        out,
        "<rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>"
    );
    let (bx, by) = canvas.to_px(Point::zeros());
    let _ = writeln!(
        out,
        "<line x1=\"{bx:.3}\" y1=\"{:.3}\" x2=\"{bx:.3}\" y2=\"{:.3}\" stroke=\"black\" stroke-width=\"3\"/>",
        by - 30.0,
        by + 30.0
    );
    for c in &scene.circles {
        let (cx, cy) = canvas.to_px(c.center);
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{:.3}\" fill=\"#ddd\" stroke=\"#555\" stroke-width=\"1\"/>",
            c.radius * canvas.scale
        );
    }
    for arm in &scene.arms {
        let outline = arm_outline(model, arm.configuration)?;
        out.push_str("<polygon points=\"");
        for (k, p) in outline.iter().enumerate() {
            let (x, y) = canvas.to_px(*p);
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x:.3},{y:.3}");
        }
        let _ = writeln!(
            out,
            "\" fill=\"{}\" fill-opacity=\"{:.3}\" stroke=\"{}\" stroke-width=\"0.5\"/>",
            arm.color, arm.opacity, arm.color
        );
    }
    for t in &scene.targets {
        let (x, y) = canvas.to_px(*t);
        let _ = writeln!(
            out,
            "<path d=\"M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}\" stroke=\"red\" stroke-width=\"2\"/>",
            x - 6.0,
            y - 6.0,
            x + 6.0,
            y + 6.0,
            x - 6.0,
            y + 6.0,
            x + 6.0,
            y - 6.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_arm_outline_is_the_taper() {
        let model = RodModel::default();
        let grid = model.grid();
        let config = Configuration::straight(&grid);
        let outline = arm_outline(&model, &config).unwrap();
        assert_eq!(outline.len(), 2 * grid.n_nodes());
        assert!((outline[0].y - model.base_radius).abs() < 1e-15);
        assert!((outline[grid.n_nodes() - 1].y - model.tip_radius).abs() < 1e-15);
        assert!((outline.last().unwrap().y + model.base_radius).abs() < 1e-15);
    }

    #[test]
    fn canvas_flips_the_vertical_axis() {
        let c = Canvas::default();
        let (_, y_low) = c.to_px(Point::new(0.0, 0.0));
        let (_, y_high) = c.to_px(Point::new(0.0, 0.1));
        assert!(y_high < y_low);
        assert_eq!(c.to_px(Point::new(c.x_min, c.y_max)), (0.0, 0.0));
    }
}
