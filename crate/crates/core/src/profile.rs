//! Time-bucketed composition of actionability types and its stacked bar chart.

use std::fmt::Write as _;

use chrono::DateTime;

use crate::actionability::{ActionSet, ActionabilityType};
use crate::corpus::Message;
use crate::error::{Error, Result};

pub const DEFAULT_BUCKET_WIDTH: i64 = 24 * 3600;

/// Segment colors keyed to category order A through I.
pub const CATEGORY_COLORS: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeBucket {
    /// UTC seconds.
    pub start: i64,
    pub width: i64,
    /// Tag counts in category order.
    pub counts: [usize; 9],
}

impl TimeBucket {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrisisProfile {
    pub buckets: Vec<TimeBucket>,
    /// Per bucket, count / bucket total; all zero for empty buckets.
    pub proportions: Vec<[f64; 9]>,
}

/// Bucket tagged messages by `floor((t - t_min) / width)`. A message with
/// several tags adds one count per tag.
pub fn build_profile(tagged: &[(Message, ActionSet)], width: i64) -> Result<CrisisProfile> {
    if width <= 0 {
        return Err(Error::Config(format!("bucket width must be positive, got {width}")));
    }
    let undated: Vec<String> = tagged
        .iter()
        .filter(|(m, _)| m.timestamp().is_none())
        .map(|(m, _)| m.id().to_string())
        .collect();
    if !undated.is_empty() {
        return Err(Error::Undated(undated));
    }
    let times = tagged.iter().filter_map(|(m, _)| m.timestamp());
    let (Some(t_min), Some(t_max)) = (times.clone().min(), times.max()) else {
        return Err(Error::Empty("no messages to profile".into()));
    };
    let n = usize::try_from((t_max - t_min) / width).expect("non-negative span") + 1;
    let mut buckets: Vec<TimeBucket> = (0..n)
        .map(|i| TimeBucket {
            start: t_min + i as i64 * width,
            width,
            counts: [0; 9],
        })
        .collect();
    for (m, actions) in tagged {
        let i = ((m.timestamp().expect("checked above") - t_min) / width) as usize;
        for t in actions.iter() {
            buckets[i].counts[t.index()] += 1;
        }
    }
    let proportions = buckets
        .iter()
        .map(|b| {
            let total = b.total();
            if total == 0 {
                [0.0; 9]
            } else {
                b.counts.map(|c| c as f64 / total as f64)
            }
        })
        .collect();
    Ok(CrisisProfile { buckets, proportions })
}

pub fn iso8601(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|d| d.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| t.to_string())
}

/// One stacked segment in display units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub bucket: usize,
    pub category: ActionabilityType,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub svg: String,
    pub csv: String,
    pub segments: Vec<Segment>,
}

pub const BAR_HEIGHT: f64 = 400.0;
const BAR_WIDTH: f64 = 40.0;
const GAP: f64 = 12.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;
const LEGEND_WIDTH: f64 = 260.0;

/// Proportional stacked bars, categories stacked A (bottom) to I (top).
pub fn render_chart(profile: &CrisisProfile) -> Result<Chart> {
    if profile.buckets.is_empty() {
        return Err(Error::Empty("profile has no buckets".into()));
    }
    let n = profile.buckets.len();
    let plot_width = n as f64 * (BAR_WIDTH + GAP) + GAP;
    let width = LEFT + plot_width + LEGEND_WIDTH;
    let height = TOP + BAR_HEIGHT + 90.0;
    let base = TOP + BAR_HEIGHT;
    let mut segments = Vec::new();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##);
    for tick in 0..=4 {
        let frac = tick as f64 / 4.0;
        let y = base - frac * BAR_HEIGHT;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{}%</text>"##,
            LEFT + plot_width,
            LEFT - 6.0,
            y + 4.0,
            tick * 25
        );
    }
    for (b, (bucket, props)) in profile.buckets.iter().zip(&profile.proportions).enumerate() {
        let x = LEFT + GAP + b as f64 * (BAR_WIDTH + GAP);
        let mut top = base;
        for t in ActionabilityType::ALL {
            let h = props[t.index()] * BAR_HEIGHT;
            if h <= 0.0 {
                continue;
            }
            top -= h;
            segments.push(Segment {
                bucket: b,
                category: t,
                x,
                y: top,
                width: BAR_WIDTH,
                height: h,
            });
            let _ = writeln!(
                svg,
                r#"<rect data-bucket="{b}" data-category="{}" x="{x}" y="{top:.4}" width="{BAR_WIDTH}" height="{h:.4}" fill="{}"><title>{} {:.2}%</title></rect>"#,
                t.code(),
                CATEGORY_COLORS[t.index()],
                t.title(),
                props[t.index()] * 100.0
            );
        }
        let label = iso8601(bucket.start);
        let date = label.get(..10).unwrap_or(&label);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end" transform="rotate(-45 {} {})">{date}</text>"#,
            x + BAR_WIDTH / 2.0,
            base + 14.0,
            x + BAR_WIDTH / 2.0,
            base + 14.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="#000000"/>"##,
        LEFT + plot_width
    );
    let lx = LEFT + plot_width + 20.0;
    for t in ActionabilityType::ALL.iter().rev() {
        let row = (8 - t.index()) as f64;
        let y = TOP + row * 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{} {}</text>"#,
            CATEGORY_COLORS[t.index()],
            lx + 18.0,
            y + 10.0,
            t.code(),
            t.title()
        );
    }
    svg.push_str("</svg>\n");

    let mut csv = String::from("bucket_start_iso8601");
    for t in ActionabilityType::ALL {
        csv.push(',');
        csv.push_str(t.name());
    }
    csv.push('\n');
    for (bucket, props) in profile.buckets.iter().zip(&profile.proportions) {
        csv.push_str(&iso8601(bucket.start));
        for p in props {
            let _ = write!(csv, ",{p:.6}");
        }
        csv.push('\n');
    }
    Ok(Chart { svg, csv, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActionabilityType::*;

    fn tagged(id: &str, t: Option<i64>, tags: &[ActionabilityType]) -> (Message, ActionSet) {
        let mut m = Message::new(id, "text").unwrap();
        if let Some(t) = t {
            m = m.with_timestamp(t);
        }
        (m, tags.iter().copied().collect())
    }

    #[test]
    fn single_bucket_proportions() {
        let input = vec![
            tagged("1", Some(100), &[Needs]),
            tagged("2", Some(200), &[Needs, PersonalOpinion]),
            tagged("3", Some(300), &[Needs]),
        ];
        let p = build_profile(&input, DEFAULT_BUCKET_WIDTH).unwrap();
        assert_eq!(p.buckets.len(), 1);
        assert_eq!(p.proportions[0][Needs.index()], 0.75);
        assert_eq!(p.proportions[0][PersonalOpinion.index()], 0.25);
        let chart = render_chart(&p).unwrap();
        let h: Vec<f64> = chart.segments.iter().map(|s| s.height).collect();
        assert_eq!(h, [300.0, 100.0]);
    }

    #[test]
    fn gaps_become_empty_buckets() {
        let input = vec![tagged("1", Some(0), &[Needs]), tagged("2", Some(3 * 86400 + 5), &[])];
        let p = build_profile(&input, 86400).unwrap();
        assert_eq!(p.buckets.len(), 4);
        assert_eq!(p.buckets[3].start, 3 * 86400);
        assert_eq!(p.proportions[1], [0.0; 9]);
        assert_eq!(p.proportions[3], [0.0; 9]);
        let chart = render_chart(&p).unwrap();
        assert_eq!(chart.segments.len(), 1);
        assert!(chart.svg.ends_with("</svg>\n"));
        assert_eq!(chart.csv.lines().count(), 5);
        assert!(chart.csv.lines().nth(1).unwrap().starts_with("1970-01-01T00:00:00Z,1.000000,"));
    }

    #[test]
    fn undated_and_empty_input() {
        let input = vec![tagged("a", None, &[Needs]), tagged("b", Some(1), &[]), tagged("c", None, &[])];
        match build_profile(&input, 60) {
            Err(Error::Undated(ids)) => assert_eq!(ids, ["a", "c"]),
            other => panic!("{other:?}"),
        }
        assert!(build_profile(&[], 60).is_err());
        assert!(build_profile(&input[1..2], 0).is_err());
    }

    #[test]
    fn reorder_invariant() {
        let mut input: Vec<_> = (0..30)
            .map(|i| tagged(&i.to_string(), Some(i * 7919 % 200_000), &[ActionabilityType::ALL[i as usize % 9]]))
            .collect();
        let a = build_profile(&input, 3600).unwrap();
        input.reverse();
        assert_eq!(a, build_profile(&input, 3600).unwrap());
    }
}
