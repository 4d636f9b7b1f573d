//! Thin wrapper over the tree-sitter Java grammar.

use std::fmt;

use tree_sitter::{Node, Parser, Tree};

/// Location of the first syntax problem in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub snippet: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{} near `{}`", self.line, self.column, self.snippet)
    }
}

impl std::error::Error for SyntaxError {}

pub fn parse(text: &str) -> Tree {
    let mut parser = Parser::new();
    parser.set_language(&tree_sitter_java::LANGUAGE.into()).expect("java grammar is ABI compatible");
    parser.parse(text, None).expect("parser has a language and no timeout")
}

/// Parses `text` and fails if the tree contains error or missing nodes.
pub fn parse_checked(text: &str) -> Result<Tree, SyntaxError> {
    let tree = parse(text);
    if tree.root_node().has_error() {
        return Err(first_error(tree.root_node(), text));
    }
    Ok(tree)
}

pub fn check(text: &str) -> Result<(), SyntaxError> {
    parse_checked(text).map(|_| ())
}

fn first_error(root: Node<'_>, text: &str) -> SyntaxError {
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_error() || node.is_missing() {
            let pos = node.start_position();
            let end = node.end_byte().min(node.start_byte() + 40);
            let snippet = text.get(node.start_byte()..end).unwrap_or_default().to_string();
            return SyntaxError {
                line: pos.row + 1,
                column: pos.column + 1,
                snippet: if node.is_missing() { format!("missing {}", node.kind()) } else { snippet },
            };
        }
        if node.has_error() {
            let mut cursor = node.walk();
            let children: Vec<_> = node.children(&mut cursor).collect();
            stack.extend(children.into_iter().rev());
        }
    }
    SyntaxError { line: 1, column: 1, snippet: String::new() }
}

pub(crate) fn text<'a>(node: Node<'_>, source: &'a str) -> &'a str {
    &source[node.start_byte()..node.end_byte()]
}

pub(crate) fn named_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

pub(crate) fn children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.children(&mut cursor).collect()
}

/// Pre-order traversal of every node under `root` (inclusive).
pub(crate) fn walk<'t>(root: Node<'t>, mut visit: impl FnMut(Node<'t>) -> bool) {
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if !visit(node) {
            continue;
        }
        let kids = children(node);
        stack.extend(kids.into_iter().rev());
    }
}

pub(crate) fn is_comment(node: Node<'_>) -> bool {
    matches!(node.kind(), "line_comment" | "block_comment")
}
