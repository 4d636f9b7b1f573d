use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use tree_sitter::Node;

use super::{
    is_test_parts, ClassKind, ClassModel, DependencyKind, FieldAssignment, FieldModel, MethodModel, Modifiers,
    ObjectCreation, Parameter, Span, TypeUsage, Visibility,
};
use crate::syntax::{self, children, named_children, text, walk, SyntaxError};

const TYPE_DECLS: &[&str] = &[
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
    "annotation_type_declaration",
];

/// Parses one compilation unit into its top-level type declarations.
///
/// Member types are folded into their enclosing declaration: their type
/// usages count for the outer class but their members are not listed.
pub fn parse_unit(path: &Path, source: &str) -> Result<Vec<ClassModel>, SyntaxError> {
    let tree = syntax::parse_checked(source)?;
    let root = tree.root_node();

    let mut package = None;
    let mut imports = Vec::new();
    for node in named_children(root) {
        match node.kind() {
            "package_declaration" => {
                package = named_children(node)
                    .into_iter()
                    .find(|n| matches!(n.kind(), "scoped_identifier" | "identifier"))
                    .map(|n| text(n, source).to_string());
            }
            "import_declaration" => {
                let raw = text(node, source);
                let body =
                    raw.trim_start_matches("import").trim().trim_start_matches("static ").trim_end_matches(';').trim();
                imports.push(body.split_whitespace().collect::<String>());
            }
            _ => {}
        }
    }

    let mut classes = Vec::new();
    for node in named_children(root) {
        if TYPE_DECLS.contains(&node.kind()) {
            classes.push(extract_class(node, source, path, package.clone(), imports.clone()));
        }
    }
    Ok(classes)
}

/// Parses a standalone class declaration (e.g. a rendered or skeletonized
/// class) and returns its first type declaration.
pub fn parse_class_text(source: &str) -> Result<ClassModel, SyntaxError> {
    parse_unit(Path::new(""), source)?.into_iter().next().ok_or_else(|| SyntaxError {
        line: 1,
        column: 1,
        snippet: "no type declaration".into(),
    })
}

fn span_of(node: Node<'_>, base: usize) -> Span {
    Span::new(node.start_byte() - base, node.end_byte() - base)
}

fn compact(s: &str) -> String {
    s.split_whitespace().collect()
}

fn extract_class(
    decl: Node<'_>,
    unit_src: &str,
    path: &Path,
    package: Option<String>,
    imports: Vec<String>,
) -> ClassModel {
    let base = decl.start_byte();
    let class_text = text(decl, unit_src).to_string();
    let name_node = decl.child_by_field_name("name").expect("type declarations are named");
    let simple_name = text(name_node, unit_src).to_string();
    let modifiers = modifiers_of(decl, unit_src);

    let kind = match decl.kind() {
        "interface_declaration" | "annotation_type_declaration" => ClassKind::Interface,
        "enum_declaration" => ClassKind::Enum,
        "record_declaration" => ClassKind::RecordLike,
        _ if modifiers.is_abstract => ClassKind::AbstractClass,
        _ => ClassKind::ConcreteClass,
    };

    let mut supertype_names = Vec::new();
    let mut interface_names = Vec::new();
    for child in named_children(decl) {
        match child.kind() {
            "superclass" => supertype_names.extend(type_list_names(child, unit_src)),
            "extends_interfaces" => supertype_names.extend(type_list_names(child, unit_src)),
            "super_interfaces" => interface_names.extend(type_list_names(child, unit_src)),
            _ => {}
        }
    }

    let body = decl.child_by_field_name("body").expect("type declarations have a body");
    let mut members: Vec<Node<'_>> = Vec::new();
    for child in named_children(body) {
        if child.kind() == "enum_body_declarations" {
            members.extend(named_children(child));
        } else {
            members.push(child);
        }
    }

    let mut fields = Vec::new();
    if kind == ClassKind::RecordLike {
        if let Some(params) = decl.child_by_field_name("parameters") {
            for p in named_children(params) {
                if let (Some(ty), Some(name)) = (p.child_by_field_name("type"), p.child_by_field_name("name")) {
                    let ty_text = compact(text(ty, unit_src));
                    let name = text(name, unit_src).to_string();
                    fields.push(FieldModel {
                        standalone_text: format!("private final {} {};", ty_text, name),
                        name,
                        base_type: base_type_name(ty, unit_src),
                        declared_type_name: ty_text,
                        initializer_span: None,
                        modifiers: Modifiers {
                            visibility: Visibility::Private,
                            is_final: true,
                            ..Modifiers::default()
                        },
                        decl_span: span_of(p, base),
                    });
                }
            }
        }
    }
    for m in &members {
        if m.kind() == "field_declaration" || m.kind() == "constant_declaration" {
            fields.extend(extract_fields(*m, unit_src, base));
        }
    }
    let field_names: HashSet<String> = fields.iter().map(|f| f.name.clone()).collect();

    let mut methods = Vec::new();
    let mut constructors = Vec::new();
    let mut nested_types = Vec::new();
    for m in &members {
        match m.kind() {
            "method_declaration" => methods.push(extract_callable(*m, unit_src, base, &field_names, kind)),
            "constructor_declaration" | "compact_constructor_declaration" => {
                constructors.push(extract_callable(*m, unit_src, base, &field_names, kind))
            }
            k if TYPE_DECLS.contains(&k) => {
                if let Some(n) = m.child_by_field_name("name") {
                    nested_types.push(text(n, unit_src).to_string());
                }
            }
            _ => {}
        }
    }

    let mut type_usages = Vec::new();
    collect_usages(decl, unit_src, DependencyKind::TypeReference, &mut type_usages);
    type_usages.retain(|u| u.name != simple_name && !nested_types.contains(&u.name));

    let is_test = is_test_parts(&simple_name, path, constructors.iter().chain(methods.iter()));

    ClassModel {
        qualified_name: match &package {
            Some(p) => format!("{p}.{simple_name}"),
            None => simple_name.clone(),
        },
        simple_name,
        package,
        kind,
        modifiers,
        fields,
        methods,
        constructors,
        supertype_names,
        interface_names,
        is_test,
        unit_path: path.to_path_buf(),
        imports,
        nested_types,
        type_usages,
        decl_span: Span::new(decl.start_byte(), decl.end_byte()),
        name_span: span_of(name_node, base),
        body_span: span_of(body, base),
        text: class_text,
    }
}

fn type_list_names(node: Node<'_>, src: &str) -> Vec<String> {
    let mut out = Vec::new();
    for child in named_children(node) {
        if child.kind() == "type_list" {
            out.extend(type_list_names(child, src));
        } else {
            out.push(base_type_name(child, src));
        }
    }
    out
}

/// Raw name of a type node without type arguments; arrays keep their `[]`.
pub(crate) fn base_type_name(node: Node<'_>, src: &str) -> String {
    match node.kind() {
        "generic_type" => named_children(node)
            .into_iter()
            .find(|n| n.kind() != "type_arguments")
            .map(|n| base_type_name(n, src))
            .unwrap_or_else(|| compact(text(node, src))),
        "array_type" => match node.child_by_field_name("element") {
            Some(el) => format!("{}[]", base_type_name(el, src)),
            None => compact(text(node, src)),
        },
        "annotated_type" => named_children(node)
            .into_iter()
            .rfind(|n| !n.kind().contains("annotation"))
            .map(|n| base_type_name(n, src))
            .unwrap_or_else(|| compact(text(node, src))),
        _ => compact(text(node, src)),
    }
}

fn modifiers_of(decl: Node<'_>, src: &str) -> Modifiers {
    let mut out = Modifiers::default();
    let Some(mods) = named_children(decl).into_iter().find(|n| n.kind() == "modifiers") else {
        return out;
    };
    for m in children(mods) {
        match m.kind() {
            "public" => out.visibility = Visibility::Public,
            "protected" => out.visibility = Visibility::Protected,
            "private" => out.visibility = Visibility::Private,
            "static" => out.is_static = true,
            "abstract" => out.is_abstract = true,
            "final" => out.is_final = true,
            "marker_annotation" | "annotation" => {
                if let Some(name) = m.child_by_field_name("name") {
                    let full = text(name, src);
                    out.annotations.push(full.rsplit('.').next().unwrap_or(full).to_string());
                }
            }
            _ => {}
        }
    }
    out
}

fn extract_fields(decl: Node<'_>, src: &str, base: usize) -> Vec<FieldModel> {
    let modifiers = modifiers_of(decl, src);
    let mods_text = named_children(decl)
        .into_iter()
        .find(|n| n.kind() == "modifiers")
        .map(|n| {
            // Annotations stay; the text is re-emitted as a prefix.
            text(n, src).split_whitespace().collect::<Vec<_>>().join(" ")
        })
        .unwrap_or_default();
    let Some(ty) = decl.child_by_field_name("type") else { return Vec::new() };
    let ty_text = compact(text(ty, src));
    let base_type = base_type_name(ty, src);
    let mut cursor = decl.walk();
    decl.children_by_field_name("declarator", &mut cursor)
        .filter_map(|d| {
            let name = d.child_by_field_name("name")?;
            let value = d.child_by_field_name("value");
            let declarator_text = text(d, src);
            let prefix = if mods_text.is_empty() { String::new() } else { format!("{mods_text} ") };
            Some(FieldModel {
                name: text(name, src).to_string(),
                declared_type_name: ty_text.clone(),
                base_type: base_type.clone(),
                initializer_span: value.map(|v| span_of(v, base)),
                modifiers: modifiers.clone(),
                decl_span: span_of(decl, base),
                standalone_text: format!("{prefix}{} {};", text(ty, src), declarator_text),
            })
        })
        .collect()
}

fn extract_params(params: Node<'_>, src: &str) -> Vec<Parameter> {
    let mut out = Vec::new();
    for p in named_children(params) {
        match p.kind() {
            "formal_parameter" => {
                let (Some(ty), Some(name)) = (p.child_by_field_name("type"), p.child_by_field_name("name")) else {
                    continue;
                };
                let dims = p.child_by_field_name("dimensions").map(|d| compact(text(d, src))).unwrap_or_default();
                out.push(Parameter {
                    name: text(name, src).to_string(),
                    type_name: format!("{}{}", compact(text(ty, src)), dims),
                    base_type: if dims.is_empty() {
                        base_type_name(ty, src)
                    } else {
                        format!("{}{}", base_type_name(ty, src), dims)
                    },
                });
            }
            "spread_parameter" => {
                let ty =
                    named_children(p).into_iter().find(|n| !matches!(n.kind(), "modifiers" | "variable_declarator"));
                let name = named_children(p)
                    .into_iter()
                    .find(|n| n.kind() == "variable_declarator")
                    .and_then(|d| d.child_by_field_name("name"));
                if let (Some(ty), Some(name)) = (ty, name) {
                    out.push(Parameter {
                        name: text(name, src).to_string(),
                        type_name: format!("{}...", compact(text(ty, src))),
                        base_type: format!("{}...", base_type_name(ty, src)),
                    });
                }
            }
            _ => {}
        }
    }
    out
}

fn extract_callable(
    decl: Node<'_>,
    src: &str,
    base: usize,
    fields: &HashSet<String>,
    owner_kind: ClassKind,
) -> MethodModel {
    let name = decl.child_by_field_name("name").map(|n| text(n, src).to_string()).unwrap_or_default();
    let mut modifiers = modifiers_of(decl, src);
    let params_node = decl.child_by_field_name("parameters");
    let parameters = params_node.map(|p| extract_params(p, src)).unwrap_or_default();
    let params_span = params_node.map(|p| span_of(p, base)).unwrap_or_else(|| {
        // compact canonical constructor: `Name {` has no parameter list
        let n = decl.child_by_field_name("name").unwrap_or(decl);
        let end = n.end_byte() - base;
        Span::new(end, end)
    });
    let return_type_name = if decl.kind() == "method_declaration" {
        decl.child_by_field_name("type").map(|t| {
            let dims = decl.child_by_field_name("dimensions").map(|d| compact(text(d, src))).unwrap_or_default();
            format!("{}{}", compact(text(t, src)), dims)
        })
    } else {
        None
    };
    let body = decl.child_by_field_name("body");
    if body.is_none() && owner_kind == ClassKind::Interface {
        modifiers.is_abstract = true;
    }

    let mut method = MethodModel {
        name,
        parameters,
        return_type_name,
        modifiers,
        decl_span: span_of(decl, base),
        params_span,
        body_span: body.map(|b| span_of(b, base)),
        accessed_fields: BTreeSet::new(),
        invoked_methods: BTreeSet::new(),
        free_identifiers: BTreeSet::new(),
        field_assignments: Vec::new(),
        body_statement_count: 0,
        object_creations: Vec::new(),
    };
    if let Some(body) = body {
        analyze_body(body, src, base, fields, &mut method);
    }
    method
}

fn is_field_child(parent: Node<'_>, field: &str, node: Node<'_>) -> bool {
    parent.child_by_field_name(field) == Some(node)
}

fn is_declaration(node: Node<'_>) -> bool {
    let Some(p) = node.parent() else { return false };
    match p.kind() {
        "variable_declarator"
        | "formal_parameter"
        | "catch_formal_parameter"
        | "enhanced_for_statement"
        | "resource"
        | "instanceof_expression"
        | "type_pattern"
        | "record_pattern_component" => is_field_child(p, "name", node),
        "inferred_parameters" => true,
        "lambda_expression" => is_field_child(p, "parameters", node),
        _ => false,
    }
}

fn analyze_body(body: Node<'_>, src: &str, base: usize, fields: &HashSet<String>, method: &mut MethodModel) {
    let mut locals: HashSet<String> = method.parameters.iter().map(|p| p.name.clone()).collect();
    walk(body, |n| {
        if n.kind() == "identifier" && is_declaration(n) {
            locals.insert(text(n, src).to_string());
        }
        true
    });

    walk(body, |n| {
        match n.kind() {
            "object_creation_expression" => {
                if let Some(ty) = n.child_by_field_name("type") {
                    method
                        .object_creations
                        .push(ObjectCreation { type_name: base_type_name(ty, src), span: span_of(n, base) });
                }
            }
            "identifier" => classify_identifier(n, src, fields, &locals, method),
            _ => {}
        }
        true
    });

    let statements: Vec<Node<'_>> = named_children(body).into_iter().filter(|s| !syntax::is_comment(*s)).collect();
    method.body_statement_count = statements.len();
    for stmt in statements {
        if let Some(a) = field_assignment(stmt, src, base, fields, &locals) {
            method.field_assignments.push(a);
        }
    }
}

fn classify_identifier(
    n: Node<'_>,
    src: &str,
    fields: &HashSet<String>,
    locals: &HashSet<String>,
    method: &mut MethodModel,
) {
    let name = text(n, src);
    let Some(p) = n.parent() else { return };
    match p.kind() {
        "field_access" if is_field_child(p, "field", n) => {
            let on_this = p.child_by_field_name("object").is_some_and(|o| o.kind() == "this");
            if on_this && fields.contains(name) {
                method.accessed_fields.insert(name.to_string());
            }
            return;
        }
        "method_invocation" if is_field_child(p, "name", n) => {
            let object = p.child_by_field_name("object");
            if object.is_none() || object.is_some_and(|o| o.kind() == "this") {
                method.invoked_methods.insert(name.to_string());
            }
            return;
        }
        "method_reference" => {
            let kids = named_children(p);
            let first = kids.first().copied();
            if first != Some(n) {
                if first.is_some_and(|f| f.kind() == "this") {
                    method.invoked_methods.insert(name.to_string());
                }
                return;
            }
        }
        "labeled_statement" | "break_statement" | "continue_statement" | "scoped_identifier" | "marker_annotation"
        | "annotation" => return,
        _ => {}
    }
    if is_declaration(n) || locals.contains(name) {
        return;
    }
    method.free_identifiers.insert(name.to_string());
    if fields.contains(name) {
        method.accessed_fields.insert(name.to_string());
    }
}

fn field_assignment(
    stmt: Node<'_>,
    src: &str,
    base: usize,
    fields: &HashSet<String>,
    locals: &HashSet<String>,
) -> Option<FieldAssignment> {
    if stmt.kind() != "expression_statement" {
        return None;
    }
    let expr = named_children(stmt).into_iter().next()?;
    if expr.kind() != "assignment_expression" {
        return None;
    }
    let op = expr.child_by_field_name("operator")?;
    if text(op, src) != "=" {
        return None;
    }
    let left = expr.child_by_field_name("left")?;
    let right = expr.child_by_field_name("right")?;
    let field = match left.kind() {
        "field_access" if left.child_by_field_name("object").is_some_and(|o| o.kind() == "this") => {
            text(left.child_by_field_name("field")?, src).to_string()
        }
        "identifier" if !locals.contains(text(left, src)) => text(left, src).to_string(),
        _ => return None,
    };
    if !fields.contains(&field) {
        return None;
    }
    Some(FieldAssignment {
        field,
        value_identifier: (right.kind() == "identifier").then(|| text(right, src).to_string()),
        value_span: span_of(right, base),
        statement_span: span_of(stmt, base),
    })
}

/// Records every type mention under `node`, classified by syntactic position.
fn collect_usages<'t>(node: Node<'t>, src: &str, ctx: DependencyKind, out: &mut Vec<TypeUsage>) {
    match node.kind() {
        "type_identifier" | "scoped_type_identifier" => {
            let name = text(node, src);
            if !matches!(name, "var") {
                out.push(TypeUsage { name: compact(name), kind: ctx });
            }
            if node.kind() == "scoped_type_identifier" {
                return;
            }
        }
        "superclass" | "super_interfaces" | "extends_interfaces" => {
            for c in named_children(node) {
                collect_usages(c, src, DependencyKind::Inheritance, out);
            }
            return;
        }
        "method_invocation" | "field_access" | "method_reference" => {
            let receiver = if node.kind() == "method_reference" {
                named_children(node).into_iter().next()
            } else {
                node.child_by_field_name("object")
            };
            if let Some(obj) = receiver.filter(|o| o.kind() == "identifier") {
                let name = text(obj, src);
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    out.push(TypeUsage { name: name.to_string(), kind: DependencyKind::StaticCall });
                }
            }
        }
        "class_body" | "interface_body" | "enum_body" | "block" | "constructor_body" => {
            for c in named_children(node) {
                collect_usages(c, src, DependencyKind::TypeReference, out);
            }
            return;
        }
        _ => {}
    }

    let field_ctx = |field: &str| -> Option<DependencyKind> {
        match (node.kind(), field) {
            ("field_declaration" | "constant_declaration", "type") => Some(DependencyKind::FieldType),
            ("record_declaration", "parameters") => Some(DependencyKind::FieldType),
            ("formal_parameter" | "spread_parameter", "type") => Some(DependencyKind::ParameterType),
            ("method_declaration", "type") => Some(DependencyKind::ReturnType),
            ("object_creation_expression", "type") => Some(DependencyKind::Instantiation),
            _ => None,
        }
    };

    let mut cursor = node.walk();
    let kids: Vec<(Node<'t>, Option<&'t str>)> = {
        let mut v = Vec::new();
        if cursor.goto_first_child() {
            loop {
                v.push((cursor.node(), cursor.field_name()));
                if !cursor.goto_next_sibling() {
                    break;
                }
            }
        }
        v
    };
    for (child, field) in kids {
        let next = match node.kind() {
            "formal_parameters" => DependencyKind::ParameterType,
            "spread_parameter" if child.kind() != "variable_declarator" => DependencyKind::ParameterType,
            _ => field.and_then(field_ctx).unwrap_or(ctx),
        };
        // Inside a parameter list of a record the components are fields.
        let next =
            if matches!(node.kind(), "formal_parameters" | "formal_parameter") && ctx == DependencyKind::FieldType {
                DependencyKind::FieldType
            } else {
                next
            };
        // Initializers and arguments are ordinary references again.
        let next = match (node.kind(), field) {
            ("variable_declarator", Some("value")) => DependencyKind::TypeReference,
            ("object_creation_expression", Some("arguments")) => DependencyKind::TypeReference,
            _ => next,
        };
        collect_usages(child, src, next, out);
    }
}
