"""Newick serialization of weighted trees.

Branch lengths are written with shortest round-trip float formatting, so a
write/parse cycle reproduces weights exactly.  Labels containing Newick
delimiters are single-quoted with ``''`` escaping.
"""

from __future__ import annotations

from .trees import TreeStructureError, WeightedTree

_NEEDS_QUOTES = set("()[]{}:;,'\" \t\n")


def _format_label(label: str) -> str:
    if not label or any(ch in _NEEDS_QUOTES for ch in label):
        return "'" + label.replace("'", "''") + "'"
    return label


def write_newick(tree: WeightedTree) -> str:
    """Serialize a tree; unrooted trees are anchored at an internal vertex."""
    if len(tree.vertices) == 1:
        label = tree.leaf_labels.get(tree.vertices[0], "")
        return _format_label(label) + ";"
    adj = tree.adjacency()
    if tree.root is not None:
        anchor = tree.root
    else:
        internal = sorted(v for v in tree.vertices if len(adj[v]) >= 2)
        # Two-leaf trees have no internal vertex; anchor at the smaller label.
        anchor = internal[0] if internal else min(
            tree.leaf_labels, key=tree.leaf_labels.get
        )

    def render(v: int, seen_from: int | None) -> str:
        kids = [(u, w) for u, w in adj[v] if u != seen_from]
        label = _format_label(tree.leaf_labels[v]) if v in tree.leaf_labels else ""
        if not kids:
            return label
        inner = ",".join(f"{render(u, v)}:{w!r}" for u, w in kids)
        return f"({inner}){label}"

    return render(anchor, None) + ";"


def parse_newick(text: str) -> WeightedTree:
    """Parse one Newick string into a WeightedTree.

    The outermost node is taken as the root when it has exactly two children;
    otherwise the tree is returned unrooted.  Labels on multi-child internal
    nodes are ignored.
    """
    s = text.strip()
    if not s.endswith(";"):
        raise TreeStructureError("Newick text must end with ';'")
    s = s[:-1]
    pos = 0

    def error(msg: str) -> TreeStructureError:
        return TreeStructureError(f"Newick parse error at offset {pos}: {msg}")

    def peek() -> str:
        return s[pos] if pos < len(s) else ""

    def parse_label() -> str:
        nonlocal pos
        if peek() == "'":
            pos += 1
            out = []
            while pos < len(s):
                if s[pos] == "'":
                    if pos + 1 < len(s) and s[pos + 1] == "'":
                        out.append("'")
                        pos += 2
                        continue
                    pos += 1
                    return "".join(out)
                out.append(s[pos])
                pos += 1
            raise error("unterminated quoted label")
        out = []
        while pos < len(s) and s[pos] not in "():;,":
            out.append(s[pos])
            pos += 1
        return "".join(out).strip()

    def parse_length() -> float:
        nonlocal pos
        if peek() != ":":
            return 0.0
        pos += 1
        start = pos
        while pos < len(s) and s[pos] not in "(),;:":
            pos += 1
        try:
            return float(s[start:pos])
        except ValueError:
            raise error(f"bad branch length {s[start:pos]!r}") from None

    # Nodes are (label, [(child_node, edge_weight), ...]) tuples.
    def parse_node():
        nonlocal pos
        children = []
        if peek() == "(":
            pos += 1
            while True:
                child = parse_node()
                w = parse_length()
                children.append((child, w))
                if peek() == ",":
                    pos += 1
                    continue
                if peek() == ")":
                    pos += 1
                    break
                raise error("expected ',' or ')'")
        label = parse_label()
        return (label, children)

    top = parse_node()
    if pos != len(s):
        raise error("trailing characters")

    vertices: list[int] = []
    edges: list[tuple[int, int, float]] = []
    leaf_labels: dict[int, str] = {}

    def build(node) -> int:
        label, children = node
        vid = len(vertices)
        vertices.append(vid)
        for child, w in children:
            cid = build(child)
            edges.append((vid, cid, w))
        if label and not children:
            leaf_labels[vid] = label
        return vid

    root_id = build(top)
    # A labeled single-child top node is the anchored-leaf form used for
    # serializing two-leaf trees.
    if top[0] and len(top[1]) == 1:
        leaf_labels[root_id] = top[0]
    root = root_id if len(top[1]) == 2 else None
    return WeightedTree(tuple(vertices), tuple(edges), leaf_labels, root=root)
