//! Plain-text edge lists: one `i j` pair of 0-based agent ids per line,
//! `#` starts a comment.

use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn parse_edge_list(text: &str, origin: &str) -> CliResult<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || CliError::Config(format!("{origin}:{}: expected `i j`, got `{line}`", lineno + 1));
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        edges.push((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?));
    }
    Ok(edges)
}

pub fn read_edge_list(path: &Path) -> CliResult<Vec<(usize, usize)>> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_edge_list(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let edges = parse_edge_list("# star\n0 1\n\n0 2  # hub\n", "x").unwrap();
        assert_eq!(edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn bad_lines_report_position() {
        let err = parse_edge_list("0 1\n0 x\n", "g.txt").unwrap_err();
        assert!(err.to_string().contains("g.txt:2"), "{err}");
        assert!(parse_edge_list("0 1 2\n", "g").is_err());
    }
}
