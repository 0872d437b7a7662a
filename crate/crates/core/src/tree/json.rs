use serde::Deserialize;
use serde_json::error::Category;

use super::{TreeNode, TreeParseError};

pub(super) fn to_json(tree: &TreeNode) -> String {
    serde_json::to_string(tree).expect("tree serialization is infallible")
}

pub(super) fn from_json(text: &str) -> Result<TreeNode, TreeParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    // Every tree level nests three JSON containers.
    de.disable_recursion_limit();
    let tree = TreeNode::deserialize(&mut de).map_err(classify)?;
    de.end().map_err(classify)?;
    Ok(tree)
}

fn classify(err: serde_json::Error) -> TreeParseError {
    match err.classify() {
        Category::Data => {
            let msg = err.to_string();
            if msg.contains("expected one of `single`, `double`, `triple`") {
                let found = msg.split('`').nth(1).unwrap_or_default().to_string();
                TreeParseError::InvalidBondType(found)
            } else {
                TreeParseError::Schema(msg)
            }
        }
        Category::Io | Category::Syntax | Category::Eof => TreeParseError::Syntax(err.to_string()),
    }
}
