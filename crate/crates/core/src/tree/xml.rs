use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{BondEntry, TreeNode, TreeParseError};
use crate::molgraph::{BondOrder, Element};

pub(super) fn to_xml(tree: &TreeNode) -> String {
    let mut out = String::new();
    write_node(tree, &mut out);
    out
}

fn write_node(node: &TreeNode, out: &mut String) {
    let _ = write!(out, "<atom name=\"{}\" id=\"{}\"", node.atom_name.symbol(), node.atom_id);
    if node.charge != 0 {
        let _ = write!(out, " charge=\"{}\"", node.charge);
    }
    out.push('>');
    for entry in &node.bonds {
        let _ = write!(out, "<bond type=\"{}\">", entry.bond_type.name());
        write_node(&entry.atom, out);
        out.push_str("</bond>");
    }
    out.push_str("</atom>");
}

enum Frame {
    Atom(TreeNode),
    Bond(BondOrder, Option<TreeNode>),
}

fn schema(msg: impl Into<String>) -> TreeParseError {
    TreeParseError::Schema(msg.into())
}

pub(super) fn from_xml(text: &str) -> Result<TreeNode, TreeParseError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Frame> = Vec::new();
    let mut root: Option<TreeNode> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| TreeParseError::Syntax(format!("{e} at byte {}", reader.buffer_position())))?;
        match event {
            Event::Start(e) => open(&e, &mut stack, &root)?,
            Event::Empty(e) => {
                open(&e, &mut stack, &root)?;
                close(&mut stack, &mut root)?;
            }
            Event::End(_) => close(&mut stack, &mut root)?,
            Event::Text(t) => {
                if !t.iter().all(u8::is_ascii_whitespace) {
                    return Err(schema("unexpected text content"));
                }
            }
            Event::Decl(_) | Event::Comment(_) => {}
            Event::CData(_) | Event::PI(_) | Event::DocType(_) => {
                return Err(schema("unsupported XML construct"));
            }
            Event::Eof => break,
        }
    }
    if !stack.is_empty() {
        return Err(TreeParseError::Syntax("unexpected end of input inside an element".into()));
    }
    root.ok_or_else(|| TreeParseError::Syntax("no root element".into()))
}

fn open(e: &BytesStart<'_>, stack: &mut Vec<Frame>, root: &Option<TreeNode>) -> Result<(), TreeParseError> {
    match e.name().as_ref() {
        b"atom" => {
            match stack.last() {
                None if root.is_some() => return Err(schema("more than one root element")),
                None | Some(Frame::Bond(_, None)) => {}
                Some(Frame::Bond(_, Some(_))) => return Err(schema("<bond> holds more than one <atom>")),
                Some(Frame::Atom(_)) => return Err(schema("<atom> directly inside <atom>")),
            }
            stack.push(Frame::Atom(atom_from_attributes(e)?));
        }
        b"bond" => {
            if !matches!(stack.last(), Some(Frame::Atom(_))) {
                return Err(schema("<bond> outside an <atom>"));
            }
            let mut order = None;
            for attr in e.attributes() {
                let attr = attr.map_err(|err| TreeParseError::Syntax(err.to_string()))?;
                let value = attr.unescape_value().map_err(|err| TreeParseError::Syntax(err.to_string()))?;
                match attr.key.as_ref() {
                    b"type" => {
                        order = Some(
                            BondOrder::from_name(&value)
                                .ok_or_else(|| TreeParseError::InvalidBondType(value.to_string()))?,
                        )
                    }
                    other => {
                        return Err(schema(format!("unknown attribute {:?} on <bond>", String::from_utf8_lossy(other))))
                    }
                }
            }
            let order = order.ok_or_else(|| schema("<bond> without type"))?;
            stack.push(Frame::Bond(order, None));
        }
        other => return Err(schema(format!("unknown element <{}>", String::from_utf8_lossy(other)))),
    }
    Ok(())
}

fn close(stack: &mut Vec<Frame>, root: &mut Option<TreeNode>) -> Result<(), TreeParseError> {
    match stack.pop() {
        Some(Frame::Atom(node)) => match stack.last_mut() {
            None => *root = Some(node),
            Some(Frame::Bond(_, slot)) => *slot = Some(node),
            Some(Frame::Atom(_)) => unreachable!("atoms are only opened inside bonds"),
        },
        Some(Frame::Bond(order, Some(atom))) => match stack.last_mut() {
            Some(Frame::Atom(parent)) => parent.bonds.push(BondEntry { bond_type: order, atom }),
            _ => unreachable!("bonds are only opened inside atoms"),
        },
        Some(Frame::Bond(_, None)) => return Err(schema("<bond> without an <atom>")),
        None => return Err(TreeParseError::Syntax("unbalanced closing tag".into())),
    }
    Ok(())
}

fn atom_from_attributes(e: &BytesStart<'_>) -> Result<TreeNode, TreeParseError> {
    let mut name = None;
    let mut id = None;
    let mut charge = 0i8;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| TreeParseError::Syntax(err.to_string()))?;
        let value = attr.unescape_value().map_err(|err| TreeParseError::Syntax(err.to_string()))?;
        match attr.key.as_ref() {
            b"name" => {
                name = Some(Element::from_symbol(&value).ok_or_else(|| schema(format!("unknown element {value:?}")))?)
            }
            b"id" => id = Some(value.parse::<usize>().map_err(|_| schema(format!("invalid atom id {value:?}")))?),
            b"charge" => charge = value.parse::<i8>().map_err(|_| schema(format!("invalid charge {value:?}")))?,
            other => return Err(schema(format!("unknown attribute {:?} on <atom>", String::from_utf8_lossy(other)))),
        }
    }
    Ok(TreeNode {
        atom_name: name.ok_or_else(|| schema("<atom> without name"))?,
        atom_id: id.ok_or_else(|| schema("<atom> without id"))?,
        charge,
        bonds: Vec::new(),
    })
}
