use jacaranda_core::entropy::{constant_path, d_omega, skew_orbit, Reading, SkewPoint};
use jacaranda_core::structure::{source, source_word, type_of_address, type_of_patch, verify_line_structure, TypeTag};
use jacaranda_core::{Address, Bits, Dyadic, Letter, RootImage, Substreetution, TreePrefix};
use proptest::prelude::*;

/// Pointer-based tree built from the level lines alone.
#[derive(Clone, Debug, PartialEq)]
struct Node {
    color: u8,
    kids: Option<Box<(Node, Node)>>,
}

fn from_lines(t: &TreePrefix) -> Node {
    let lines: Vec<Bits> = t.lines().collect();
    fn build(lines: &[Bits], level: usize, pos: usize) -> Node {
        let color = lines[level].get(pos) as u8;
        let kids = (level + 1 < lines.len())
            .then(|| Box::new((build(lines, level + 1, 2 * pos), build(lines, level + 1, 2 * pos + 1))));
        Node { color, kids }
    }
    build(&lines, 0, 0)
}

fn to_lines(n: &Node) -> Vec<String> {
    let mut out = Vec::new();
    let mut level = vec![n];
    while !level.is_empty() {
        out.push(level.iter().map(|n| char::from(b'0' + n.color)).collect());
        level = level
            .iter()
            .filter_map(|n| n.kids.as_deref())
            .flat_map(|(a, b)| [a, b])
            .collect();
    }
    out
}

/// The substitution written out directly: the root image triple, then the
/// grandchildren are images of the child subtrees picked by the grammar.
fn naive_h(s: &Substreetution, n: &Node) -> Node {
    let im = s.images()[n.color as usize];
    let Some(kids) = n.kids.as_deref() else {
        let leaf = |c| Node { color: c, kids: None };
        return Node {
            color: im.root,
            kids: Some(Box::new((leaf(im.a), leaf(im.b)))),
        };
    };
    let pick = |d: usize| match s.grammar()[d] {
        Letter::A => naive_h(s, &kids.0),
        Letter::B => naive_h(s, &kids.1),
    };
    let inner = |c, x, y| Node {
        color: c,
        kids: Some(Box::new((x, y))),
    };
    Node {
        color: im.root,
        kids: Some(Box::new((inner(im.a, pick(0), pick(1)), inner(im.b, pick(2), pick(3))))),
    }
}

fn naive_node(n: &Node, w: &Address) -> u8 {
    let mut cur = n;
    for l in w.letters() {
        let (a, b) = cur.kids.as_deref().expect("address within depth");
        cur = if *l == Letter::A { a } else { b };
    }
    cur.color
}

fn prefix(depth: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = TreePrefix> {
    depth.prop_flat_map(|d| {
        proptest::collection::vec(any::<bool>(), (1usize << d) - 1)
            .prop_map(move |v| TreePrefix::new(d, Bits::from_bools(v)).unwrap())
    })
}

fn address(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Address> {
    proptest::collection::vec(any::<bool>(), len)
        .prop_map(|v| Address::new(v.into_iter().map(|b| Letter::from_bit(b as u64)).collect()))
}

fn substitution() -> impl Strategy<Value = Substreetution> {
    let image = (0u8..2, 0u8..2, 0u8..2).prop_map(|(root, a, b)| RootImage { root, a, b });
    let letter = any::<bool>().prop_map(|b| Letter::from_bit(b as u64));
    (image.clone(), image, [letter.clone(), letter.clone(), letter.clone(), letter])
        .prop_filter_map("invalid substitution", |(i0, i1, g)| Substreetution::new([i0, i1], g).ok())
}

fn jacaranda(depth: u32) -> TreePrefix {
    Substreetution::jacaranda().fixed_point(0, depth).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn source_inverts_h(b in prefix(1..=8)) {
        let s = Substreetution::jacaranda();
        prop_assert_eq!(source(&s.apply(&b).unwrap(), &s).unwrap(), b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn shift_commutes_with_h(
        (a, w) in (1usize..=4).prop_flat_map(|m| (prefix(m as u32 + 1..=m as u32 + 6), address(2 * m..=2 * m)))
    ) {
        let s = Substreetution::jacaranda();
        let lhs = s.apply(&a).unwrap().shift(&w).unwrap();
        let rhs = s.apply(&a.shift(&source_word(&w, &s).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #[test]
    fn apply_matches_naive_h(s in substitution(), t in prefix(1..=6)) {
        let fast = s.apply(&t).unwrap();
        let naive = naive_h(&s, &from_lines(&t));
        let lines: Vec<String> = fast.lines().map(|l| l.to_string()).collect();
        prop_assert_eq!(lines, to_lines(&naive));
    }

    #[test]
    fn node_at_matches_descent(t in prefix(1..=10), w in address(0..=9)) {
        prop_assume!(w.len() < t.depth() as usize);
        prop_assert_eq!(t.node_at(&w).unwrap(), naive_node(&from_lines(&t), &w));
    }

    #[test]
    fn shift_composes(t in prefix(3..=10), u in address(0..=4), v in address(0..=4)) {
        prop_assume!(u.len() + v.len() < t.depth() as usize);
        prop_assert_eq!(t.shift(&u).unwrap().shift(&v).unwrap(), t.shift(&u.concat(&v)).unwrap());
    }

    #[test]
    fn distance_is_ultrametric(a in prefix(5..=5), b in prefix(5..=5), c in prefix(5..=5)) {
        let (ab, bc, ac) = (a.distance(&b).unwrap(), b.distance(&c).unwrap(), a.distance(&c).unwrap());
        prop_assert!(ac <= ab.max(bc));
        prop_assert_eq!(ab, b.distance(&a).unwrap());
        prop_assert_eq!(a.distance(&a).unwrap(), Dyadic::Agree);
    }

    #[test]
    fn d_omega_is_ultrametric_and_dominates_d(
        a in prefix(6..=6), b in prefix(6..=6), c in prefix(6..=6), w in address(0..=5), suffix in any::<bool>()
    ) {
        let r = if suffix { Reading::Suffix } else { Reading::Prefix };
        let d = |x: &TreePrefix, y: &TreePrefix| d_omega(x, y, &w, r).unwrap();
        prop_assert!(d(&a, &c) <= d(&a, &b).max(d(&b, &c)));
        prop_assert!(d(&a, &b) >= a.distance(&b).unwrap());
    }

    #[test]
    fn sbtr_round_trip(t in prefix(1..=12)) {
        let bytes = t.to_sbtr_bytes();
        prop_assert_eq!(bytes.len(), 9 + ((1usize << t.depth()) - 1).div_ceil(8));
        prop_assert_eq!(TreePrefix::from_sbtr_bytes(&bytes).unwrap(), t.clone());
        prop_assert_eq!(TreePrefix::decode(&t.encode()).unwrap(), t);
    }

    #[test]
    fn skew_orbit_is_a_path_shift(w in address(1..=8), k in 0usize..=8) {
        prop_assume!(k <= w.len());
        let x = SkewPoint { path: w.clone(), tree: jacaranda(12) };
        let orbit = skew_orbit(&x, k).unwrap();
        for (i, p) in orbit.iter().enumerate() {
            prop_assert_eq!(&p.tree, &x.tree.shift(&w.prefix(i)).unwrap());
            prop_assert_eq!(&p.path, &w.suffix(w.len() - i));
        }
    }

    #[test]
    fn classifier_is_sound(w in address(1..=10)) {
        let s = Substreetution::jacaranda();
        let window = jacaranda(20).shift(&w).unwrap();
        let truth = type_of_address(&w).unwrap();
        let v = w.len().trailing_zeros();
        match type_of_patch(&window, &s).unwrap() {
            TypeTag::Odd => prop_assert_eq!(truth, TypeTag::Odd),
            TypeTag::Even(k) => prop_assert_eq!(k, v),
            TypeTag::EvenAtLeast(k) => prop_assert!(v >= k, "{} claims >= {} but v = {}", w, k, v),
            TypeTag::Unresolved => prop_assert!(false, "unresolved at depth {}", window.depth()),
        }
    }
}

#[test]
fn fixed_point_is_fixed() {
    let s = Substreetution::jacaranda();
    for n in 1..=20 {
        let t = jacaranda(n);
        assert_eq!(s.apply_truncated(&t, n), t, "N = {n}");
    }
}

#[test]
fn fixed_point_line_structure() {
    assert!(verify_line_structure(&jacaranda(20)).passed());
}

#[test]
fn b_path_is_zero() {
    let t = jacaranda(24);
    for k in 1..24 {
        assert_eq!(t.node_at(&constant_path(Letter::B, k)).unwrap(), 0, "b^{k}");
    }
}

#[test]
fn ab_path_reads_10_repeated() {
    let t = jacaranda(24);
    let mut w = Address::empty();
    let mut word = String::new();
    for k in 0..24 {
        word.push(char::from(b'0' + t.node_at(&w).unwrap()));
        w.push(if k % 2 == 0 { Letter::A } else { Letter::B });
    }
    assert_eq!(word, format!("0{}", "10".repeat(11)) + "1");
}

#[test]
fn b_path_orbit_roots_are_zero() {
    let x = SkewPoint {
        path: constant_path(Letter::B, 15),
        tree: jacaranda(16),
    };
    for p in skew_orbit(&x, 15).unwrap().iter().skip(1) {
        assert_eq!(p.tree.root(), 0);
    }
}
