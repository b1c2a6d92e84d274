//! Plain-text and static HTML renderings. The loner magnet is never shown
//! and each tab is labeled with its first visible command.

use super::{LayoutError, MenuLayout};

/// Visible groups of each tab, dropping the loner and anything left empty.
fn visible<'a>(layout: &MenuLayout, names: &'a [String], loner: Option<usize>) -> Vec<Vec<Vec<&'a str>>> {
    layout
        .tabs
        .iter()
        .map(|tab| {
            tab.groups
                .iter()
                .map(|g| g.iter().filter(|&&id| Some(id) != loner).map(|&id| names[id].as_str()).collect::<Vec<_>>())
                .filter(|g| !g.is_empty())
                .collect::<Vec<_>>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn check(layout: &MenuLayout, names: &[String], loner: Option<usize>) -> Result<(), LayoutError> {
    layout.ensure_valid(names.len(), loner)
}

/// One column per tab: label, rule, then commands with `---` between groups.
pub fn render_text(layout: &MenuLayout, names: &[String], loner: Option<usize>) -> Result<String, LayoutError> {
    check(layout, names, loner)?;
    let columns: Vec<Vec<String>> = visible(layout, names, loner)
        .into_iter()
        .map(|groups| {
            let label = groups[0][0].to_string();
            let mut lines = vec![label.clone(), String::new()];
            for (g, members) in groups.iter().enumerate() {
                if g > 0 {
                    lines.push("---".into());
                }
                lines.extend(members.iter().map(|s| s.to_string()));
            }
            let width = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(3);
            lines[1] = "=".repeat(width);
            lines
        })
        .collect();

    let widths: Vec<usize> =
        columns.iter().map(|c| c.iter().map(|l| l.chars().count()).max().unwrap_or(0)).collect();
    let height = columns.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    for row in 0..height {
        let cells: Vec<String> = columns
            .iter()
            .zip(&widths)
            .map(|(col, &w)| {
                let cell = col.get(row).map(String::as_str).unwrap_or("");
                format!("{cell:<w$}")
            })
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Self-contained HTML page: inline styles, no scripts.
pub fn render_html(layout: &MenuLayout, names: &[String], loner: Option<usize>) -> Result<String, LayoutError> {
    check(layout, names, loner)?;
    let mut out = String::from(
        "<!DOCTYPE html>\n<html>\n<head><meta charset=\"utf-8\"><title>Menu layout</title></head>\n\
         <body style=\"font-family:sans-serif;margin:16px\">\n\
         <div style=\"display:flex;gap:16px;align-items:flex-start\">\n",
    );
    for groups in visible(layout, names, loner) {
        out.push_str("<section style=\"border:1px solid #888;padding:4px 8px;min-width:8em\">\n");
        out.push_str(&format!(
            "<h3 style=\"margin:0 0 4px 0;border-bottom:2px solid #333\">{}</h3>\n",
            escape(groups[0][0])
        ));
        for (g, members) in groups.iter().enumerate() {
            if g > 0 {
                out.push_str("<hr style=\"border:0;border-top:1px solid #aaa;margin:4px 0\">\n");
            }
            out.push_str("<ul style=\"list-style:none;margin:0;padding:0\">\n");
            for name in members {
                out.push_str(&format!("<li>{}</li>\n", escape(name)));
            }
            out.push_str("</ul>\n");
        }
        out.push_str("</section>\n");
    }
    out.push_str("</div>\n</body>\n</html>\n");
    Ok(out)
}
