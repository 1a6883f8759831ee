mod common;

use btweave::dsl::{load, parse_document, parse_syntax, print_document, tree_decl, Document, DslError, Item};
use common::*;
use proptest::prelude::*;

const DEMO: &str = include_str!("../examples/demo_axis.btw");
const GOLDEN: &str = "tests/golden/demo_axis.btw";

#[test]
fn demo_prints_to_golden() {
    let doc = parse_document(DEMO).unwrap();
    let text = print_document(&doc);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, golden);
    // The canonical form is a fixpoint.
    let again = parse_document(&golden).unwrap();
    assert_eq!(again, doc);
    assert_eq!(print_document(&again), golden);
}

#[test]
fn demo_lowers_to_four_hosts() {
    let (_, p) = load(DEMO).unwrap();
    let cell = &p.deployments["cell"];
    let hosts: Vec<_> = cell.hosts.iter().map(|h| h.id.as_str()).collect();
    assert_eq!(hosts, ["BASE", "AXIS", "ROBOT", "HMI"]);
    assert_eq!(cell.data_links.len(), 2);
    assert_eq!(p.skills.len(), 5);
    assert_eq!(p.placements["get_axis_position"], ("HMI".to_string(), "hmi_main".to_string()));
    let axis = &p.trees["axis_main"];
    assert!(axis.find("move_axis_to_pos/pre/lookup").is_some());
    assert!(axis.find("move_axis_to_pos/inv/split/0/reset_axis").is_some());
    assert!(axis.find("move_axis_to_pos/inv/split/1/power_on_axis").is_some());
}

fn doc_for(spec: &RNode) -> Document {
    let mut text = String::new();
    for a in spec.actions() {
        if !text.contains(&format!("action {}(", a.name)) {
            text.push_str(&format!("action {}()\n", a.name));
        }
    }
    let mut doc = parse_document(&text).unwrap();
    doc.items.push(Item::Tree(tree_decl("t", &spec.to_tree("t"))));
    doc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_trees_round_trip(seed in any::<u64>()) {
        let spec = TreeGen::new(4, false).gen(&mut rng(seed));
        let doc = doc_for(&spec);
        let text = print_document(&doc);
        let (back, p) = load(&text).unwrap();
        prop_assert_eq!(&p.trees["t"], &spec.to_tree("t"));
        prop_assert_eq!(print_document(&back), text);
    }

    /// A character no token can start with is reported where it was put.
    #[test]
    fn stray_character_is_located(line in 0usize..200, col in 0usize..40) {
        let lines: Vec<&str> = DEMO.lines().collect();
        let line = line % lines.len();
        let target = lines[line];
        // Outside comments and strings only.
        let limit = target.find(['#', '"']).unwrap_or(target.len());
        let col = col.min(limit);
        let mut corrupted = lines.clone();
        let edited = format!("{}$ {}", &target[..col], &target[col..]);
        corrupted[line] = &edited;
        match parse_syntax(&corrupted.join("\n")) {
            Err(DslError::Syntax { line: l, col: c, .. }) => prop_assert_eq!((l, c), (line + 1, col + 1)),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    /// Dropping a closing brace is noticed no earlier than the drop.
    #[test]
    fn missing_brace_is_reported_after_it(pick in any::<prop::sample::Index>()) {
        let closers: Vec<usize> = DEMO.match_indices('}').map(|(i, _)| i).collect();
        let at = closers[pick.index(closers.len())];
        let corrupted = format!("{}{}", &DEMO[..at], &DEMO[at + 1..]);
        let line_of_drop = DEMO[..at].matches('\n').count() + 1;
        match parse_syntax(&corrupted) {
            Err(DslError::Syntax { line, .. }) => prop_assert!(line >= line_of_drop, "{} < {}", line, line_of_drop),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn unterminated_string_points_at_its_quote() {
    // The last string in the file, so no later quote can close it.
    let at = DEMO.rfind('"').unwrap();
    let text = format!("{}{}", &DEMO[..at], &DEMO[at + 1..]);
    let open = DEMO[..at].rfind('"').unwrap();
    let line = DEMO[..open].matches('\n').count() + 1;
    let col = open - DEMO[..open].rfind('\n').map_or(0, |i| i + 1) + 1;
    match parse_syntax(&text) {
        Err(DslError::Syntax { line: l, col: c, .. }) => assert_eq!((l, c), (line, col)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn misspelled_keyword_is_located() {
    let text = DEMO.replacen("  fallback @\"base\"", "  fallbak @\"base\"", 1);
    let line = DEMO.lines().position(|l| l.contains("fallback @\"base\"")).unwrap() + 1;
    match parse_syntax(&text) {
        Err(DslError::Syntax { line: l, col: 3, found, .. }) => {
            assert_eq!(l, line);
            assert!(found.contains("fallbak"), "{found}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unresolved_references_are_listed_together() {
    let text = DEMO
        .replacen("action: reset\n", "action: reboot\n", 1)
        .replacen("remote ROBOT.robot_main", "remote ROBOT.robot_mian", 1);
    match parse_document(&text) {
        Err(DslError::Resolution(d)) => {
            assert!(d.len() >= 2, "{d:?}");
            assert!(d.iter().any(|x| x.message.contains("reboot")));
            assert!(d.iter().any(|x| x.message.contains("robot_mian")));
        }
        other => panic!("{other:?}"),
    }
}
