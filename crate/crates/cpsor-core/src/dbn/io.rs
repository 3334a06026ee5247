//! Line-oriented text document format for fitted models.
//!
//! ```text
//! dbn_document 1
//! sample_count 5000
//! node Risk_grade 3 S inter
//! node Emo_cluster 3 O inter
//! edge Risk_grade Emo_cluster
//! cpt Risk_grade
//! row 0.2 0.5 0.3
//! cpt Emo_cluster Risk_grade
//! row 0.8 0.15 0.05
//! ...
//! inter Emo_cluster
//! row 0.9 0.05 0.05
//! ...
//! end
//! ```
//!
//! Probabilities are written in shortest exact decimal form, so a document
//! round-trips bit-for-bit. Row sums are re-validated on read.

use super::{Cpt, DbnError, DbnModel, DbnStructure, Layer, NodeDef, CPT_ROW_TOL};
use crate::traj::fmt_f64;

pub const DOC_VERSION: u32 = 1;

pub fn serialize(model: &DbnModel) -> String {
    let st = &model.structure;
    let mut out = String::new();
    out.push_str(&format!("dbn_document {DOC_VERSION}\n"));
    out.push_str(&format!("sample_count {}\n", model.sample_count));
    for (i, node) in st.nodes.iter().enumerate() {
        out.push_str(&format!(
            "node {} {} {} {}\n",
            node.name,
            node.cardinality,
            node.layer.as_str(),
            if st.has_inter_self(i) { "inter" } else { "nointer" }
        ));
    }
    for (p, c) in st.intra_edges() {
        out.push_str(&format!("edge {} {}\n", st.nodes[p].name, st.nodes[c].name));
    }
    for (node, cpt) in model.intra_cpts.iter().enumerate() {
        out.push_str(&format!("cpt {}", st.nodes[node].name));
        for &p in &cpt.parents {
            out.push_str(&format!(" {}", st.nodes[p].name));
        }
        out.push('\n');
        write_rows(&mut out, cpt);
    }
    for (node, cpt) in model.inter_cpts.iter().enumerate() {
        if let Some(cpt) = cpt {
            out.push_str(&format!("inter {}\n", st.nodes[node].name));
            write_rows(&mut out, cpt);
        }
    }
    out.push_str("end\n");
    out
}

fn write_rows(out: &mut String, cpt: &Cpt) {
    for r in 0..cpt.n_rows() {
        out.push_str("row");
        for &p in cpt.row(r) {
            out.push(' ');
            out.push_str(&fmt_f64(p));
        }
        out.push('\n');
    }
}

pub fn deserialize(text: &str) -> Result<DbnModel, DbnError> {
    let mut lines = text.lines().enumerate().peekable();
    let perr = |line: usize, msg: String| DbnError::Parse { line: line + 1, msg };

    let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty document".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("dbn_document") {
        return Err(perr(ln, "expected 'dbn_document <version>' header".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(ln, "missing document version".into()))?;
    if version != DOC_VERSION {
        return Err(perr(ln, format!("unsupported schema version {version}")));
    }

    let (ln, sc_line) = lines.next().ok_or_else(|| perr(1, "missing sample_count".into()))?;
    let sample_count: usize = sc_line
        .strip_prefix("sample_count ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| perr(ln, "expected 'sample_count <n>'".into()))?;

    // Node section.
    let mut nodes: Vec<NodeDef> = Vec::new();
    let mut inter_flags: Vec<bool> = Vec::new();
    while let Some(&(_, line)) = lines.peek() {
        if !line.starts_with("node ") {
            break;
        }
        let (ln, line) = lines.next().unwrap();
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 {
            return Err(perr(ln, "expected 'node <name> <cardinality> <layer> <inter|nointer>'".into()));
        }
        let cardinality: usize = f[2]
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| perr(ln, format!("invalid cardinality '{}'", f[2])))?;
        let layer = Layer::parse_str(f[3]).ok_or_else(|| perr(ln, format!("invalid layer '{}'", f[3])))?;
        let inter = match f[4] {
            "inter" => true,
            "nointer" => false,
            other => return Err(perr(ln, format!("invalid transition flag '{other}'"))),
        };
        nodes.push(NodeDef::new(f[1], cardinality, layer));
        inter_flags.push(inter);
    }
    if nodes.is_empty() {
        return Err(perr(2, "document declares no nodes".into()));
    }
    let mut structure = DbnStructure::new(nodes);
    for (i, flag) in inter_flags.iter().enumerate() {
        structure.set_inter_self(i, *flag);
    }

    // Edge section.
    while let Some(&(_, line)) = lines.peek() {
        if !line.starts_with("edge ") {
            break;
        }
        let (ln, line) = lines.next().unwrap();
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(perr(ln, "expected 'edge <parent> <child>'".into()));
        }
        let p = structure
            .node_index(f[1])
            .ok_or_else(|| perr(ln, format!("unknown node '{}'", f[1])))?;
        let c = structure
            .node_index(f[2])
            .ok_or_else(|| perr(ln, format!("unknown node '{}'", f[2])))?;
        structure.add_intra(p, c);
    }
    structure.topo_order()?;

    // CPT sections.
    let n = structure.n_nodes();
    let mut intra: Vec<Option<Cpt>> = (0..n).map(|_| None).collect();
    let mut inter: Vec<Option<Cpt>> = (0..n).map(|_| None).collect();
    while let Some((ln, line)) = lines.next() {
        if line == "end" {
            for node in 0..n {
                if intra[node].is_none() {
                    return Err(perr(ln, format!("missing cpt for node {}", structure.nodes[node].name)));
                }
                if structure.has_inter_self(node) && inter[node].is_none() {
                    return Err(perr(ln, format!("missing inter table for node {}", structure.nodes[node].name)));
                }
            }
            let model = DbnModel::new(
                structure,
                intra.into_iter().map(|c| c.unwrap()).collect(),
                inter,
                sample_count,
            );
            model.validate()?;
            return Ok(model);
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.first().copied() {
            Some("cpt") => {
                let child = structure
                    .node_index(f.get(1).copied().unwrap_or(""))
                    .ok_or_else(|| perr(ln, format!("unknown cpt node in '{line}'")))?;
                let declared: Vec<usize> = f[2..]
                    .iter()
                    .map(|name| {
                        structure
                            .node_index(name)
                            .ok_or_else(|| perr(ln, format!("unknown parent '{name}'")))
                    })
                    .collect::<Result<_, _>>()?;
                let expected = structure.parents(child);
                if declared != expected {
                    return Err(perr(ln, format!(
                        "cpt parents for {} do not match the declared edges",
                        structure.nodes[child].name
                    )));
                }
                let parent_cards: Vec<usize> =
                    expected.iter().map(|&p| structure.cardinality(p)).collect();
                let cpt = read_rows(
                    &mut lines,
                    child,
                    expected,
                    parent_cards,
                    structure.cardinality(child),
                )?;
                intra[child] = Some(cpt);
            }
            Some("inter") => {
                let child = structure
                    .node_index(f.get(1).copied().unwrap_or(""))
                    .ok_or_else(|| perr(ln, format!("unknown inter node in '{line}'")))?;
                if !structure.has_inter_self(child) {
                    return Err(perr(ln, format!(
                        "node {} declared nointer but has a transition table",
                        structure.nodes[child].name
                    )));
                }
                let card = structure.cardinality(child);
                let cpt = read_rows(&mut lines, child, vec![child], vec![card], card)?;
                inter[child] = Some(cpt);
            }
            _ => return Err(perr(ln, format!("unexpected line '{line}'"))),
        }
    }
    Err(DbnError::Parse { line: text.lines().count(), msg: "missing 'end'".into() })
}

fn read_rows<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    child: usize,
    parents: Vec<usize>,
    parent_cards: Vec<usize>,
    child_card: usize,
) -> Result<Cpt, DbnError> {
    let n_rows: usize = parent_cards.iter().product();
    let mut table = Vec::with_capacity(n_rows * child_card);
    for _ in 0..n_rows {
        let (ln, line) = lines
            .next()
            .ok_or(DbnError::Parse { line: 0, msg: "unexpected end of document in table".into() })?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.first().copied() != Some("row") || f.len() != child_card + 1 {
            return Err(DbnError::Parse {
                line: ln + 1,
                msg: format!("expected 'row' with {child_card} probabilities"),
            });
        }
        let mut sum = 0.0;
        for v in &f[1..] {
            let p: f64 = v.parse().map_err(|_| DbnError::Parse {
                line: ln + 1,
                msg: format!("invalid probability '{v}'"),
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(DbnError::Parse {
                    line: ln + 1,
                    msg: format!("probability {p} outside [0, 1]"),
                });
            }
            sum += p;
            table.push(p);
        }
        if (sum - 1.0).abs() > CPT_ROW_TOL {
            return Err(DbnError::Parse {
                line: ln + 1,
                msg: format!("row sums to {sum}, expected 1"),
            });
        }
    }
    Ok(Cpt { child, parents, parent_cards, child_card, table })
}

#[cfg(test)]
mod tests {
    use super::super::{mle_fit, DbnStructure, Layer, NodeDef, Prior};
    use super::*;
    use crate::rng::Rng;

    fn fitted_two_node() -> DbnModel {
        let nodes = vec![NodeDef::new("Cause", 2, Layer::O), NodeDef::new("Effect", 3, Layer::R)];
        let mut st = DbnStructure::new(nodes);
        st.add_intra(0, 1);
        st.validate(Prior::Sor).unwrap();
        let mut rng = Rng::new(12);
        let frames: Vec<Vec<usize>> = (0..400)
            .map(|_| {
                let c = rng.gen_range(2);
                let e = if rng.next_f64() < 0.7 { c } else { rng.gen_range(3) };
                vec![c, e]
            })
            .collect();
        mle_fit(&st, &[frames], 1.0).unwrap()
    }

    #[test]
    fn fitted_model_round_trips_bitwise() {
        let model = fitted_two_node();
        let doc = serialize(&model);
        let back = deserialize(&doc).unwrap();
        assert_eq!(back, model);
        assert_eq!(serialize(&back), doc);
    }

    #[test]
    fn hand_written_document_loads() {
        let doc = "\
dbn_document 1
sample_count 10
node Weather 2 S nointer
node Mood 2 O inter
edge Weather Mood
cpt Weather
row 0.25 0.75
cpt Mood Weather
row 0.9 0.1
row 0.3 0.7
inter Mood
row 0.8 0.2
row 0.4 0.6
end
";
        let model = deserialize(doc).unwrap();
        assert_eq!(model.sample_count, 10);
        assert_eq!(model.structure.node_index("Mood"), Some(1));
        assert_eq!(model.intra_cpts[0].row(0), &[0.25, 0.75]);
        assert_eq!(model.intra_cpts[1].row(1), &[0.3, 0.7]);
        assert_eq!(model.inter_cpts[1].as_ref().unwrap().row(0), &[0.8, 0.2]);
        assert!(model.inter_cpts[0].is_none());
    }

    #[test]
    fn tampered_row_sum_rejected() {
        let model = fitted_two_node();
        let doc = serialize(&model);
        // Break the first probability so its row sums to ~0.9.
        let first_row_line = doc.lines().position(|l| l.starts_with("row ")).unwrap();
        let mut lines: Vec<String> = doc.lines().map(|l| l.to_string()).collect();
        let fields: Vec<&str> = lines[first_row_line].split_whitespace().collect();
        let old: f64 = fields[1].parse().unwrap();
        lines[first_row_line] =
            format!("row {} {}", old - 0.1, fields[2..].join(" "));
        let err = deserialize(&lines.join("\n")).unwrap_err();
        assert!(err.to_string().contains("sums to"), "{err}");
    }

    #[test]
    fn schema_version_mismatch_rejected() {
        let model = fitted_two_node();
        let doc = serialize(&model).replace("dbn_document 1", "dbn_document 9");
        let err = deserialize(&doc).unwrap_err();
        assert!(err.to_string().contains("unsupported schema"), "{err}");
    }
}
