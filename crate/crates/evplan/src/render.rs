//! Schematic SVG figures of the network, the candidate catalog and the plans.

use std::fmt::Write;

use evplan_core::candgen::{EndpointCatalog, ExistingStation};
use evplan_core::netcore::{Network, NetworkPoint};
use evplan_core::planner::{FcsPlan, McsSchedule, Mode, StageSets};

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];
const WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("vertex `{0}` has no coordinates; rendering needs x and y for every vertex")]
pub struct MissingCoordinates(pub String);

/// What to draw on top of the network.
#[derive(Default, Clone, Copy)]
pub struct Layers<'a> {
    pub catalog: Option<&'a EndpointCatalog>,
    pub stations: &'a [ExistingStation],
    pub plan: Option<&'a FcsPlan>,
    /// Unit positions at one period.
    pub schedule: Option<(&'a StageSets, &'a McsSchedule, usize)>,
}

struct Frame {
    min: (f64, f64),
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(net: &Network) -> Result<Self, MissingCoordinates> {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (_, v) in net.vertices() {
            let (x, y) = v.coords.ok_or_else(|| MissingCoordinates(v.name.clone()))?;
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
        let scale = (WIDTH - 2.0 * MARGIN) / span;
        Ok(Frame { min: lo, scale, height: (hi.1 - lo.1) * scale + 2.0 * MARGIN })
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (MARGIN + (x - self.min.0) * self.scale, self.height - MARGIN - (y - self.min.1) * self.scale)
    }
}

fn at(net: &Network, frame: &Frame, p: &NetworkPoint) -> (f64, f64) {
    frame.map(net.point_coords(p).expect("frame construction checked every vertex"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render(net: &Network, layers: &Layers<'_>) -> Result<String, MissingCoordinates> {
    let frame = Frame::new(net)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.6}" height="{:.6}" viewBox="0 0 {:.6} {:.6}">"#,
        WIDTH, frame.height, WIDTH, frame.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for e in net.edges() {
        let (x1, y1) = at(net, &frame, &NetworkPoint::Vertex(e.a));
        let (x2, y2) = at(net, &frame, &NetworkPoint::Vertex(e.b));
        let _ = writeln!(
            s,
            r##"<line class="edge" x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}" stroke="#999999" stroke-width="2"/>"##
        );
    }
    for (v, x) in net.vertices() {
        let (cx, cy) = at(net, &frame, &NetworkPoint::Vertex(v));
        let colour = PALETTE[net.zone_of(v).index() % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<circle class="vertex" cx="{cx:.6}" cy="{cy:.6}" r="6" fill="{colour}"><title>{} ({})</title></circle>"#,
            escape(&x.name),
            escape(net.zone_name(net.zone_of(v)))
        );
    }
    if let Some(cat) = layers.catalog {
        for ep in &cat.endpoints {
            let (cx, cy) = at(net, &frame, &ep.location);
            let _ = writeln!(
                s,
                r##"<circle class="endpoint" cx="{cx:.6}" cy="{cy:.6}" r="2.5" fill="#333333"><title>{}</title></circle>"##,
                ep.label()
            );
        }
    }
    for st in layers.stations {
        let (cx, cy) = at(net, &frame, &st.location);
        let _ = writeln!(
            s,
            r##"<rect class="existing" x="{:.6}" y="{:.6}" width="10" height="10" fill="#2ca02c"><title>{}</title></rect>"##,
            cx - 5.0,
            cy - 5.0,
            escape(&st.id)
        );
    }
    if let (Some(plan), Some(cat)) = (layers.plan, layers.catalog) {
        for &w in &plan.selected {
            let (cx, cy) = at(net, &frame, &cat.endpoints[w].location);
            let _ = writeln!(
                s,
                r##"<path class="fcs" d="M {:.6} {:.6} l 7 12 l -14 0 z" fill="#1f77b4"><title>{}</title></path>"##,
                cx,
                cy - 8.0,
                cat.endpoints[w].label()
            );
        }
    }
    if let Some((sets, schedule, t)) = layers.schedule {
        for m in 0..schedule.fleet {
            let a = schedule.at(t, m);
            let Some(n) = a.point else { continue };
            let (cx, cy) = at(net, &frame, &sets.points[n].location);
            let colour = if a.mode == Mode::Serve { "#d62728" } else { "#ff7f0e" };
            let _ = writeln!(
                s,
                r#"<polygon class="mcs" points="{:.6},{:.6} {:.6},{:.6} {:.6},{:.6} {:.6},{:.6}" fill="{colour}"><title>m{} {} at {}</title></polygon>"#,
                cx,
                cy - 7.0,
                cx + 7.0,
                cy,
                cx,
                cy + 7.0,
                cx - 7.0,
                cy,
                m + 1,
                a.mode.as_str(),
                escape(&sets.points[n].label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use evplan_core::netcore::NetworkBuilder;

    fn net(coords: bool) -> Network {
        let mut b = NetworkBuilder::new();
        let c = |x: f64| if coords { Some((x, 0.0)) } else { None };
        b.vertex("a", "z1", c(0.0)).vertex("b", "z2", c(3.0)).edge("a", "b", 3.0);
        b.build().unwrap()
    }

    #[test]
    fn network_only() {
        let svg = render(&net(true), &Layers::default()).unwrap();
        assert_eq!(svg.matches(r#"class="edge""#).count(), 1);
        assert_eq!(svg.matches(r#"class="vertex""#).count(), 2);
        assert_eq!(svg.matches(r#"class="fcs""#).count(), 0);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn missing_coordinates() {
        assert_eq!(render(&net(false), &Layers::default()), Err(MissingCoordinates("a".into())));
    }
}
