//! Aligned text tables for bags of flat records and timestamped rows.

use tlq_core::model::{Bag, Const, Time, Value};

/// How timestamps are shown in a rendered table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimeStyle {
    /// The raw integer.
    #[default]
    Plain,
    /// Minutes since midnight as `hh:mm`.
    Clock,
}

impl TimeStyle {
    pub fn show(self, t: Time) -> String {
        if t.is_forever() {
            return "∞".into();
        }
        if t.is_beginning() {
            return "-∞".into();
        }
        match self {
            TimeStyle::Plain => t.raw().to_string(),
            TimeStyle::Clock => format!(
                "{:02}:{:02}",
                t.raw().div_euclid(60),
                t.raw().rem_euclid(60)
            ),
        }
    }
}

fn cell(v: &Value, style: TimeStyle) -> String {
    match v {
        Value::Const(Const::Str(s)) => s.clone(),
        Value::Const(Const::Time(t)) => style.show(*t),
        Value::Const(c) => c.to_string(),
        other => other.to_string(),
    }
}

/// Renders a bag as a table. Columns follow `order` where given, remaining
/// labels come after in sorted order; row periods become `start` and `end`
/// columns. Rows are sorted by start time, then by their cells.
pub fn render_bag(bag: &Bag, order: &[&str], style: TimeStyle) -> String {
    let mut labels: Vec<String> = Vec::new();
    let mut temporal = false;
    for v in bag.iter() {
        let data = match v.as_row() {
            Some((d, _, _)) => {
                temporal = true;
                d
            }
            None => v,
        };
        if let Some(r) = data.as_record() {
            for l in r.keys() {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
        }
    }
    let mut columns: Vec<String> = order
        .iter()
        .filter(|l| labels.iter().any(|m| m == *l))
        .map(|l| l.to_string())
        .collect();
    for l in labels {
        if !columns.contains(&l) {
            columns.push(l);
        }
    }
    let scalar = columns.is_empty() && !bag.is_empty();
    if scalar {
        columns.push("value".into());
    }
    let mut header = columns.clone();
    if temporal {
        header.push("start".into());
        header.push("end".into());
    }
    let mut keyed: Vec<(Option<Time>, Vec<String>)> = bag
        .iter()
        .map(|v| {
            let (data, period) = match v.as_row() {
                Some((d, s, e)) => (d, Some((s, e))),
                None => (v, None),
            };
            let mut cells: Vec<String> = if scalar {
                vec![cell(data, style)]
            } else {
                columns
                    .iter()
                    .map(|l| {
                        data.as_record()
                            .and_then(|r| r.get(l))
                            .map_or_else(String::new, |x| cell(x, style))
                    })
                    .collect()
            };
            if let Some((s, e)) = period {
                cells.push(style.show(s));
                cells.push(style.show(e));
            }
            (period.map(|p| p.0), cells)
        })
        .collect();
    keyed.sort();
    let rows: Vec<Vec<String>> = keyed.into_iter().map(|(_, c)| c).collect();
    table(&header, &rows)
}

/// Pipe-separated table with a header rule, columns padded to equal width.
pub fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let width = |s: &str| s.chars().count();
    let mut widths: Vec<usize> = header.iter().map(|h| width(h)).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(width(c));
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (c, w) in cells.iter().zip(&widths) {
            s.push(' ');
            s.push_str(c);
            s.push_str(&" ".repeat(w - width(c)));
            s.push_str(" |");
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    out.push('|');
    for w in &widths {
        out.push_str(&"-".repeat(w + 2));
        out.push('|');
    }
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forever_renders_as_infinity_and_columns_align() {
        let rec = |t: &str| Value::record([("task", Value::str(t)), ("done", Value::bool(true))]);
        let bag: Bag = [
            Value::row(rec("Go shopping"), Time::hm(11, 0), Time::FOREVER),
            Value::row(rec("TV"), Time::hm(9, 5), Time::hm(19, 0)),
        ]
        .into_iter()
        .collect();
        let out = render_bag(&bag, &["task", "done"], TimeStyle::Clock);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "| task        | done | start | end   |");
        assert_eq!(lines[2], "| TV          | true | 09:05 | 19:00 |");
        assert_eq!(lines[3], "| Go shopping | true | 11:00 | ∞     |");
        assert!(lines
            .iter()
            .all(|l| l.chars().count() == lines[0].chars().count()));
    }

    #[test]
    fn scalars_get_a_value_column() {
        let bag: Bag = [Value::int(2), Value::int(1)].into_iter().collect();
        assert_eq!(
            render_bag(&bag, &[], TimeStyle::Plain),
            "| value |\n|-------|\n| 1     |\n| 2     |\n"
        );
    }
}
