use std::collections::BTreeMap;

use super::{kekulize, AromaticAtom, SmilesError, Unsupported};
use crate::molgraph::{BondOrder, Element, MolGraph, ValenceTable, MAX_CHARGE, MIN_CHARGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
}

#[derive(Debug, Clone)]
struct ParsedAtom {
    element: Element,
    charge: i8,
    aromatic: bool,
    hydrogens: u8,
    position: usize,
}

struct OpenRing {
    atom: usize,
    symbol: Option<BondSymbol>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<ParsedAtom>,
    bonds: Vec<(usize, usize, Option<BondSymbol>)>,
    rings: BTreeMap<u32, OpenRing>,
}

fn syntax(position: usize, message: &'static str) -> SmilesError {
    SmilesError::Syntax { position, message }
}

fn unsupported(feature: Unsupported, position: usize) -> SmilesError {
    SmilesError::UnsupportedFeature { feature, position }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { text: text.as_bytes(), pos: 0, atoms: Vec::new(), bonds: Vec::new(), rings: BTreeMap::new() }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.text.get(self.pos + offset).copied()
    }

    fn has_bond(&self, a: usize, b: usize) -> bool {
        self.bonds.iter().any(|&(x, y, _)| (x == a && y == b) || (x == b && y == a))
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<usize> = Vec::new();
        let mut pending: Option<(BondSymbol, usize)> = None;

        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(syntax(at, "branch without a preceding atom"));
                    }
                    if pending.is_some() {
                        return Err(syntax(at, "bond symbol before branch"));
                    }
                    if self.peek_at(1) == Some(b')') {
                        return Err(syntax(at, "empty branch"));
                    }
                    branches.push(prev.unwrap());
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(syntax(at, "bond symbol before branch close"));
                    }
                    prev = Some(branches.pop().ok_or_else(|| syntax(at, "unbalanced ')'"))?);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' => {
                    if prev.is_none() {
                        return Err(syntax(at, "bond symbol without a preceding atom"));
                    }
                    if pending.is_some() {
                        return Err(syntax(at, "two consecutive bond symbols"));
                    }
                    let symbol = match c {
                        b'-' => BondSymbol::Single,
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        _ => BondSymbol::Aromatic,
                    };
                    pending = Some((symbol, at));
                    self.pos += 1;
                }
                b'$' => return Err(unsupported(Unsupported::QuadrupleBond, at)),
                b'/' | b'\\' => return Err(unsupported(Unsupported::Stereo, at)),
                b'.' => return Err(unsupported(Unsupported::Fragment, at)),
                b'0'..=b'9' | b'%' => {
                    let atom = prev.ok_or_else(|| syntax(at, "ring bond without a preceding atom"))?;
                    let label = self.ring_label()?;
                    let symbol = pending.take().map(|(s, _)| s);
                    self.ring_bond(atom, label, symbol, at)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.attach(atom, &mut prev, &mut pending);
                }
                b'*' => {
                    return Err(SmilesError::UnknownElement { symbol: "*".into(), position: at });
                }
                c if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    self.attach(atom, &mut prev, &mut pending);
                }
                _ => return Err(syntax(at, "unexpected character")),
            }
        }

        if let Some((_, at)) = pending {
            return Err(syntax(at, "dangling bond symbol"));
        }
        if !branches.is_empty() {
            return Err(syntax(self.text.len(), "unclosed branch"));
        }
        if let Some((&label, _)) = self.rings.iter().next() {
            return Err(SmilesError::UnclosedRing { label });
        }
        Ok(())
    }

    fn attach(&mut self, atom: ParsedAtom, prev: &mut Option<usize>, pending: &mut Option<(BondSymbol, usize)>) {
        let index = self.atoms.len();
        self.atoms.push(atom);
        if let Some(p) = *prev {
            self.bonds.push((p, index, pending.take().map(|(s, _)| s)));
        }
        *prev = Some(index);
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let at = self.pos;
        let c = self.text[self.pos];
        self.pos += 1;
        if c != b'%' {
            return Ok(u32::from(c - b'0'));
        }
        match (self.peek(), self.peek_at(1)) {
            (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                self.pos += 2;
                Ok(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
            }
            _ => Err(syntax(at, "'%' must be followed by two digits")),
        }
    }

    fn ring_bond(&mut self, atom: usize, label: u32, symbol: Option<BondSymbol>, at: usize) -> Result<(), SmilesError> {
        let Some(open) = self.rings.remove(&label) else {
            self.rings.insert(label, OpenRing { atom, symbol });
            return Ok(());
        };
        let symbol = match (open.symbol, symbol) {
            (Some(a), Some(b)) if a != b => return Err(SmilesError::RingBondConflict { label }),
            (a, b) => a.or(b),
        };
        if open.atom == atom {
            return Err(syntax(at, "ring bond closes on its own atom"));
        }
        if self.has_bond(open.atom, atom) {
            return Err(syntax(at, "ring bond duplicates an existing bond"));
        }
        self.bonds.push((open.atom, atom, symbol));
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<ParsedAtom, SmilesError> {
        let at = self.pos;
        let c = self.text[self.pos];
        let next = self.peek_at(1);
        let (element, aromatic, width) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => {
                let mut symbol = (c as char).to_string();
                if let Some(n) = next.filter(u8::is_ascii_lowercase) {
                    symbol.push(n as char);
                }
                return Err(SmilesError::UnknownElement { symbol, position: at });
            }
        };
        self.pos += width;
        Ok(ParsedAtom { element, charge: 0, aromatic, hydrogens: 0, position: at })
    }

    fn bracket_atom(&mut self) -> Result<ParsedAtom, SmilesError> {
        let start = self.pos;
        self.pos += 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(unsupported(Unsupported::Isotope, self.pos));
        }

        let sym_at = self.pos;
        let first = self.peek().ok_or_else(|| syntax(sym_at, "unterminated bracket atom"))?;
        let mut symbol = String::new();
        let aromatic = first.is_ascii_lowercase();
        if !first.is_ascii_alphabetic() {
            if first == b'*' {
                return Err(SmilesError::UnknownElement { symbol: "*".into(), position: sym_at });
            }
            return Err(syntax(sym_at, "expected element symbol"));
        }
        symbol.push(first as char);
        self.pos += 1;
        if let Some(n) = self.peek().filter(u8::is_ascii_lowercase) {
            symbol.push(n as char);
            self.pos += 1;
        }
        let element = if aromatic {
            match symbol.as_str() {
                "b" | "c" | "n" | "o" | "p" | "s" => Element::from_symbol(&symbol.to_ascii_uppercase()),
                _ => None,
            }
        } else {
            Element::from_symbol(&symbol)
        }
        .ok_or(SmilesError::UnknownElement { symbol, position: sym_at })?;

        if self.peek() == Some(b'@') {
            return Err(unsupported(Unsupported::Stereo, self.pos));
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = 1;
            if let Some(d) = self.peek().filter(u8::is_ascii_digit) {
                hydrogens = d - b'0';
                self.pos += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            let charge_at = self.pos;
            self.pos += 1;
            charge = unit;
            if let Some(d) = self.peek().filter(u8::is_ascii_digit) {
                self.pos += 1;
                let mut magnitude = i32::from(d - b'0');
                if let Some(d2) = self.peek().filter(u8::is_ascii_digit) {
                    self.pos += 1;
                    magnitude = magnitude * 10 + i32::from(d2 - b'0');
                }
                charge = unit * magnitude;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if !(i32::from(MIN_CHARGE)..=i32::from(MAX_CHARGE)).contains(&charge) {
                return Err(unsupported(Unsupported::Charge, charge_at));
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(b':') => return Err(unsupported(Unsupported::AtomClass, self.pos)),
            Some(b'@') => return Err(unsupported(Unsupported::Stereo, self.pos)),
            _ => return Err(syntax(self.pos, "malformed bracket atom")),
        }

        Ok(ParsedAtom { element, charge: charge as i8, aromatic, hydrogens, position: start })
    }
}

/// Parses a single-fragment SMILES string into a kekulized [`MolGraph`].
///
/// Atoms keep SMILES reading order except that explicit neutral hydrogens
/// bonded to one heavy atom are folded into implicit hydrogens.
pub fn parse_smiles(text: &str, table: &ValenceTable) -> Result<MolGraph, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::EmptyInput);
    }
    let mut parser = Parser::new(text);
    parser.run()?;
    let Parser { atoms, bonds, .. } = parser;

    let aromatic_atoms: Vec<AromaticAtom> = atoms
        .iter()
        .map(|a| AromaticAtom { element: a.element, charge: a.charge, aromatic: a.aromatic, hydrogens: a.hydrogens })
        .collect();
    let typed: Vec<(usize, usize, Option<BondOrder>)> = bonds
        .iter()
        .map(|&(a, b, symbol)| {
            let order = match symbol {
                Some(BondSymbol::Single) => Some(BondOrder::Single),
                Some(BondSymbol::Double) => Some(BondOrder::Double),
                Some(BondSymbol::Triple) => Some(BondOrder::Triple),
                Some(BondSymbol::Aromatic) => None,
                None if atoms[a].aromatic && atoms[b].aromatic => None,
                None => Some(BondOrder::Single),
            };
            (a, b, order)
        })
        .collect();
    let orders = kekulize(&aromatic_atoms, &typed, table)?;

    let n = atoms.len();
    let mut used = vec![0u32; n];
    for (&(a, b, _), order) in typed.iter().zip(&orders) {
        used[a] += u32::from(order.value());
        used[b] += u32::from(order.value());
    }
    let over: Vec<usize> = (0..n)
        .filter(|&i| used[i] + u32::from(atoms[i].hydrogens) > table.max_valence(atoms[i].element, atoms[i].charge))
        .collect();
    if !over.is_empty() {
        return Err(SmilesError::Valence(over));
    }

    // Fold explicit hydrogens into their heavy neighbor.
    let mut degree = vec![0usize; n];
    let mut heavy_neighbor = vec![false; n];
    for (&(a, b, _), order) in typed.iter().zip(&orders) {
        degree[a] += 1;
        degree[b] += 1;
        if *order == BondOrder::Single {
            heavy_neighbor[a] |= atoms[b].element.is_heavy();
            heavy_neighbor[b] |= atoms[a].element.is_heavy();
        }
    }
    let mut keep = vec![true; n];
    for (i, atom) in atoms.iter().enumerate() {
        if atom.element == Element::H {
            if atom.charge == 0 && atom.hydrogens == 0 && degree[i] == 1 && heavy_neighbor[i] {
                keep[i] = false;
            } else {
                return Err(unsupported(Unsupported::ExplicitHydrogen, atom.position));
            }
        }
    }
    let mut new_index = vec![usize::MAX; n];
    let mut graph_atoms = Vec::with_capacity(n);
    for (i, atom) in atoms.iter().enumerate() {
        if keep[i] {
            new_index[i] = graph_atoms.len();
            graph_atoms.push((atom.element, atom.charge));
        }
    }
    let graph_bonds = typed
        .iter()
        .zip(&orders)
        .filter(|((a, b, _), _)| keep[*a] && keep[*b])
        .map(|(&(a, b, _), &order)| (new_index[a], new_index[b], order));
    Ok(MolGraph::new(graph_atoms, graph_bonds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::BondOrder::*;

    fn parse(s: &str) -> MolGraph {
        parse_smiles(s, &ValenceTable::default()).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn bond_list(g: &MolGraph) -> Vec<(usize, usize, BondOrder)> {
        g.bonds().iter().map(|b| (b.a, b.b, b.order)).collect()
    }

    #[test]
    fn single_carbon() {
        let g = parse("C");
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.atom(0).element, Element::C);
        assert_eq!(g.atom(0).charge, 0);
        assert_eq!(g.bond_count(), 0);
    }

    #[test]
    fn cyclopropene_bonds_follow_reading_order() {
        let g = parse("C1=CC1");
        assert_eq!(g.atom_count(), 3);
        assert_eq!(bond_list(&g), vec![(0, 1, Double), (0, 2, Single), (1, 2, Single)]);
    }

    #[test]
    fn branches_and_two_letter_elements() {
        let g = parse("ClC(Br)(F)I");
        let elements: Vec<Element> = g.atoms().iter().map(|a| a.element).collect();
        assert_eq!(elements, vec![Element::Cl, Element::C, Element::Br, Element::F, Element::I]);
        assert_eq!(g.degree(1), 4);
    }

    #[test]
    fn bracket_charges_and_hydrogens() {
        let g = parse("C[NH3+]");
        assert_eq!(g.atom(1).charge, 1);
        let g = parse("[O-]C(=O)C");
        assert_eq!(g.atom(0).charge, -1);
        let g = parse("[N++](C)(C)(C)(C)C");
        assert_eq!(g.atom(0).charge, 2);
        let g = parse("C[N+2](C)(C)(C)C");
        assert_eq!(g.atom(1).charge, 2);
        assert!(matches!(
            parse_smiles("[N+3]", &ValenceTable::default()),
            Err(SmilesError::UnsupportedFeature { feature: Unsupported::Charge, .. })
        ));
    }

    #[test]
    fn percent_ring_labels() {
        let g = parse("C%10CC%10");
        assert_eq!(g.bond_count(), 3);
        assert!(parse_smiles("C%1CC", &ValenceTable::default()).is_err());
    }

    #[test]
    fn ring_bond_order_on_either_side() {
        assert_eq!(parse("C=1CC1").bond_order(0, 2), Some(Double));
        assert_eq!(parse("C1CC=1").bond_order(0, 2), Some(Double));
        assert_eq!(parse("C=1CC=1").bond_order(0, 2), Some(Double));
    }

    #[test]
    fn explicit_hydrogens_are_folded() {
        let g = parse("[H]C([H])([H])[H]");
        assert_eq!(g.atom_count(), 1);
        let g = parse("[H]n1cccc1");
        assert_eq!(g.atom_count(), 5);
        assert!(matches!(
            parse_smiles("[H][H]", &ValenceTable::default()),
            Err(SmilesError::UnsupportedFeature { feature: Unsupported::ExplicitHydrogen, .. })
        ));
    }

    #[test]
    fn rejections_are_typed() {
        let t = ValenceTable::default();
        let unsupported = |s: &str| match parse_smiles(s, &t) {
            Err(SmilesError::UnsupportedFeature { feature, .. }) => feature,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(unsupported("C[C@H](N)O"), Unsupported::Stereo);
        assert_eq!(unsupported("F/C=C/F"), Unsupported::Stereo);
        assert_eq!(unsupported("[2H]C"), Unsupported::Isotope);
        assert_eq!(unsupported("CC.O"), Unsupported::Fragment);
        assert_eq!(unsupported("[CH3:1]C"), Unsupported::AtomClass);
        assert_eq!(unsupported("C$C"), Unsupported::QuadrupleBond);
        assert!(matches!(parse_smiles("[se]1cccc1", &t), Err(SmilesError::UnknownElement { .. })));
        assert!(matches!(parse_smiles("C[Si](C)C", &t), Err(SmilesError::UnknownElement { .. })));
        assert!(matches!(parse_smiles("*C", &t), Err(SmilesError::UnknownElement { .. })));
        assert!(matches!(parse_smiles("C1CC1C2", &t), Err(SmilesError::UnclosedRing { label: 2 })));
        assert!(matches!(parse_smiles("C11", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("C12CC12", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("C)C", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("C()C", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("C=", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("=C", &t), Err(SmilesError::Syntax { .. })));
        assert!(matches!(parse_smiles("C C", &t), Err(SmilesError::Syntax { .. })));
    }

    #[test]
    fn aromatic_substituent_bond_between_rings_is_single() {
        let g = parse("c1ccccc1c1ccccc1");
        assert_eq!(g.bond_order(5, 6), Some(Single));
        let doubles = g.bonds().iter().filter(|b| b.order == Double).count();
        assert_eq!(doubles, 6);
    }
}
