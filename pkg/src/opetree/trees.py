"""Labeled binary trees and 2-colored trees with their operad structure.

Plain trees are the objects of the magma operad: binary trees whose
leaves carry the labels {1, ..., r}, plus the distinguished empty tree.
Colored trees additionally carry closed/open leaf colors and the unary
color-change `Tau`; an o-colored tree is a binary combination of open
leaves and Tau-wrapped closed trees, with open labels increasing left
to right.

All values are immutable; every operation returns fresh trees.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence, Union


class TreeError(ValueError):
    """Invalid tree structure, labels, or composition arguments."""


class ParseError(TreeError):
    """Syntax error in a tree expression; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# ---------------------------------------------------------------------------
# Node types.  Plain and colored trees share `Node`; a tree is colored as
# soon as it contains a ClosedLeaf, OpenLeaf or Tau.


@dataclass(frozen=True)
class Leaf:
    label: int

    def __repr__(self):
        return f"Leaf({self.label})"


@dataclass(frozen=True)
class ClosedLeaf:
    label: int

    def __repr__(self):
        return f"ClosedLeaf({self.label})"


@dataclass(frozen=True)
class OpenLeaf:
    label: int

    def __repr__(self):
        return f"OpenLeaf({self.label})"


@dataclass(frozen=True)
class Node:
    left: "Tree"
    right: "Tree"

    def __repr__(self):
        return f"Node({self.left!r}, {self.right!r})"


@dataclass(frozen=True)
class Tau:
    child: "Tree"

    def __repr__(self):
        return f"Tau({self.child!r})"


@dataclass(frozen=True)
class _Empty:
    def __repr__(self):
        return "EMPTY"


EMPTY = _Empty()

Tree = Union[Leaf, ClosedLeaf, OpenLeaf, Node, Tau, _Empty]


# ---------------------------------------------------------------------------
# Traversal and validation


def leaves(t: Tree) -> list:
    """Leaf nodes of ``t`` in left-to-right order."""
    out = []

    def walk(x):
        if isinstance(x, (Leaf, ClosedLeaf, OpenLeaf)):
            out.append(x)
        elif isinstance(x, Node):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, Tau):
            walk(x.child)
        elif isinstance(x, _Empty):
            raise TreeError("empty tree inside a node")
        else:
            raise TreeError(f"not a tree: {x!r}")

    if not isinstance(t, _Empty):
        walk(t)
    return out


def leaf_labels(t: Tree) -> list:
    return [lf.label for lf in leaves(t)]


def is_colored(t: Tree) -> bool:
    if isinstance(t, (ClosedLeaf, OpenLeaf, Tau)):
        return True
    if isinstance(t, Node):
        return is_colored(t.left) or is_colored(t.right)
    return False


def validate_tree(t: Tree) -> int:
    """Check plain-tree invariants; return the leaf count r."""
    if isinstance(t, _Empty):
        return 0
    lv = leaves(t)
    for lf in lv:
        if not isinstance(lf, Leaf):
            raise TreeError(f"colored leaf {lf!r} in a plain tree")
    labels = sorted(lf.label for lf in lv)
    if labels != list(range(1, len(lv) + 1)):
        raise TreeError(f"leaf labels {labels} are not exactly 1..{len(lv)}")
    return len(lv)


def color_of(t: Tree) -> str:
    """Output color: 'c' for a pure closed tree, 'o' otherwise."""
    if isinstance(t, ClosedLeaf):
        return "c"
    if isinstance(t, (OpenLeaf, Tau)):
        return "o"
    if isinstance(t, Node):
        return "o" if "o" in (color_of(t.left), color_of(t.right)) else "c"
    raise TreeError(f"not a colored tree node: {t!r}")


def validate_colored(t: Tree) -> tuple[int, int, str]:
    """Check colored-tree invariants; return (r, s, output color).

    Typing rules: a Node joins two subtrees of equal color; Tau wraps a
    c-colored subtree.  In an o-colored tree every closed leaf sits below
    exactly one Tau; open labels increase left to right.
    """
    if isinstance(t, _Empty):
        raise TreeError("the empty tree is not a colored tree")

    def check(x, tau_depth):
        # returns (closed labels, open labels in order, color)
        if isinstance(x, ClosedLeaf):
            return [x.label], [], "c"
        if isinstance(x, OpenLeaf):
            if tau_depth > 0:
                raise TreeError("open leaf below a Tau")
            return [], [x.label], "o"
        if isinstance(x, Tau):
            if tau_depth > 0:
                raise TreeError("nested Tau")
            cl, op, col = check(x.child, tau_depth + 1)
            if col != "c":
                raise TreeError("Tau child must be c-colored")
            return cl, op, "o"
        if isinstance(x, Node):
            cl1, op1, col1 = check(x.left, tau_depth)
            cl2, op2, col2 = check(x.right, tau_depth)
            if col1 != col2:
                raise TreeError(f"node joins mismatched colors {col1!r} and {col2!r}")
            return cl1 + cl2, op1 + op2, col1
        if isinstance(x, Leaf):
            raise TreeError(f"plain leaf {x!r} in a colored tree")
        raise TreeError(f"not a tree: {x!r}")

    closed, opens, color = check(t, 0)
    r, s = len(closed), len(opens)
    if color == "c" and s:
        raise TreeError("c-colored tree with open leaves")
    if sorted(closed) != list(range(1, r + 1)):
        raise TreeError(f"closed labels {sorted(closed)} are not exactly 1..{r}")
    if opens != list(range(r + 1, r + s + 1)):
        raise TreeError(
            f"open labels {opens} must be r+1..r+s and increase left to right"
        )
    return r, s, color


# ---------------------------------------------------------------------------
# Parsing and formatting
#
# Grammar (whitespace between tokens is ignored):
#   tree := leaf | "(" tree tree ")" | tree tree      (root juxtaposition)
#   leaf := INT | "c" INT | "o" INT
#   tau  := "t(" tree ")"
# Digit runs are first read as single-digit leaves ("(5(23))" has leaves
# 2,3); if the resulting label set is not exactly {1..r} the input is
# reparsed with maximal multi-digit numbers (so "10 11" works for large
# trees).  Canonical output is compact for single-digit labels and
# space-separated otherwise.


def _tokenize(text: str, split_digits: bool) -> list:
    toks = []  # (kind, value, position)
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            toks.append(("(", None, i))
            i += 1
        elif ch == ")":
            toks.append((")", None, i))
            i += 1
        elif ch == "t" and i + 1 < n and text[i + 1] == "(":
            toks.append(("tau", None, i))
            i += 2
        elif ch in "co":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise ParseError(f"{ch!r} must be followed by a label", i)
            if split_digits and j - i - 1 > 1:
                for k in range(i + 1, j):
                    toks.append((ch, int(text[k]), i))
            else:
                toks.append((ch, int(text[i + 1 : j]), i))
            i = j
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if split_digits:
                for k in range(i, j):
                    toks.append(("int", int(text[k]), k))
            else:
                toks.append(("int", int(text[i:j]), i))
            i = j
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    return toks


def _parse_tokens(toks: list, text_len: int) -> Tree:
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None, text_len)

    def parse_item():
        nonlocal pos
        kind, value, at = peek()
        if kind == "int":
            pos += 1
            return Leaf(value)
        if kind == "c":
            pos += 1
            return ClosedLeaf(value)
        if kind == "o":
            pos += 1
            return OpenLeaf(value)
        if kind == "(":
            pos += 1
            inner = parse_juxtaposition(")")
            if peek()[0] != ")":
                raise ParseError("missing ')'", peek()[2])
            pos += 1
            return inner
        if kind == "tau":
            pos += 1
            inner = parse_juxtaposition(")")
            if peek()[0] != ")":
                raise ParseError("missing ')' after Tau", peek()[2])
            pos += 1
            return Tau(inner)
        raise ParseError("expected a leaf or '('", at)

    def parse_juxtaposition(closer):
        nonlocal pos
        items = [parse_item()]
        while peek()[0] not in (closer, None):
            items.append(parse_item())
            if len(items) > 2:
                raise ParseError(
                    "more than two juxtaposed subtrees; parenthesize", peek()[2]
                )
        if len(items) == 1:
            return items[0]
        return Node(items[0], items[1])

    tree = parse_juxtaposition(None)
    if pos != len(toks):
        raise ParseError("trailing input", toks[pos][2])
    return tree


def parse_tree(text: str) -> Tree:
    """Parse a tree expression; returns EMPTY for blank input.

    Round-trips with :func:`format_tree`.  Raises :class:`ParseError`
    with a position on syntax errors, :class:`TreeError` on bad labels.
    """
    if not text.strip():
        return EMPTY
    first_err = None
    for split in (True, False):
        toks = _tokenize(text, split_digits=split)
        try:
            tree = _parse_tokens(toks, len(text))
            if is_colored(tree):
                validate_colored(tree)
            else:
                validate_tree(tree)
            return tree
        except TreeError as err:
            if first_err is None:
                first_err = err
    raise first_err


def format_tree(t: Tree) -> str:
    """Canonical text for a tree; outermost parentheses omitted."""
    if isinstance(t, _Empty):
        return ""
    wide = any(lf.label > 9 for lf in leaves(t))
    sep = " " if wide else ""

    def fmt(x, root=False):
        if isinstance(x, Leaf):
            return str(x.label)
        if isinstance(x, ClosedLeaf):
            return f"c{x.label}"
        if isinstance(x, OpenLeaf):
            return f"o{x.label}"
        if isinstance(x, Tau):
            return f"t({fmt(x.child, root=True)})"
        if isinstance(x, Node):
            body = fmt(x.left) + sep + fmt(x.right)
            return body if root else f"({body})"
        raise TreeError(f"not a tree: {x!r}")

    return fmt(t, root=True)


# ---------------------------------------------------------------------------
# Combinatorial metadata.  Internal vertices are identified by their path
# from the root ('l'/'r' steps) since structurally equal subtrees may repeat.


@dataclass(frozen=True)
class TreeMeta:
    """Vertex/edge data of a plain tree with r >= 2 leaves.

    ``vertices`` are root paths of internal nodes in pre-order; ``edges``
    are the internal edges, named by their lower vertex d(e) (the upper
    vertex u(e) is the parent path).  ``left_leaf``/``right_leaf`` give
    L(v) and R(v): the rightmost descendant leaf of v's left child and
    of v itself.
    """

    tree: Tree
    r: int
    vertices: tuple
    edges: tuple
    left_leaf: dict
    right_leaf: dict
    leaf_path: dict
    root_vertex: tuple = ()

    @property
    def rightmost_leaf(self) -> int:
        return self.right_leaf[self.root_vertex]

    def upper(self, edge):
        return edge[:-1]

    def edge_index(self, edge) -> int:
        return self.edges.index(edge)


def tree_meta(t: Tree) -> TreeMeta:
    r = validate_tree(t)
    if r < 2:
        raise TreeError(f"tree metadata needs r >= 2, got r = {r}")
    vertices, edges = [], []
    left_leaf, right_leaf, leaf_path = {}, {}, {}

    def walk(x, path):
        if isinstance(x, Leaf):
            leaf_path[x.label] = path
            return x.label
        vertices.append(path)
        if path != ():
            edges.append(path)
        rl_left = walk(x.left, path + ("l",))
        rl_right = walk(x.right, path + ("r",))
        left_leaf[path] = rl_left
        right_leaf[path] = rl_right
        return rl_right

    walk(t, ())
    # keep only edges whose lower vertex is internal (they all are, by
    # construction) -- edges touching leaves never enter `edges`
    return TreeMeta(
        tree=t,
        r=r,
        vertices=tuple(vertices),
        edges=tuple(edges),
        left_leaf=left_leaf,
        right_leaf=right_leaf,
        leaf_path=leaf_path,
    )


# ---------------------------------------------------------------------------
# Operad structure on plain trees


def _relabel(t: Tree, f) -> Tree:
    if isinstance(t, Leaf):
        return Leaf(f(t.label))
    if isinstance(t, Node):
        return Node(_relabel(t.left, f), _relabel(t.right, f))
    raise TreeError(f"not a plain tree: {t!r}")


def compose(a: Tree, p: int, b: Tree) -> Tree:
    """Partial composition: insert ``b`` into leaf ``p`` of ``a``.

    Labels of ``b`` shift by p-1 and labels of ``a`` above p by m-1
    where m is b's leaf count.  With b = EMPTY the leaf p is erased and
    higher labels decrement.
    """
    n = validate_tree(a)
    m = validate_tree(b)
    if isinstance(a, _Empty):
        raise TreeError("cannot compose into the empty tree")
    if not 1 <= p <= n:
        raise TreeError(f"slot {p} out of range 1..{n}")

    if isinstance(b, _Empty):
        if n == 1:
            return EMPTY

        def erase(x):
            if isinstance(x, Leaf):
                return None if x.label == p else x
            left, right = erase(x.left), erase(x.right)
            if left is None:
                return right
            if right is None:
                return left
            return Node(left, right)

        pruned = erase(a)
        return _relabel(pruned, lambda k: k - 1 if k > p else k)

    shifted_b = _relabel(b, lambda k: k + p - 1)

    def insert(x):
        if isinstance(x, Leaf):
            if x.label == p:
                return shifted_b
            return Leaf(x.label + m - 1) if x.label > p else x
        return Node(insert(x.left), insert(x.right))

    return insert(a)


def permute(a: Tree, g: Sequence[int] | dict) -> Tree:
    """Relabel each leaf i by g(i); ``g`` is a permutation of {1..r}.

    Sequences are read as one-line notation: g[i-1] is the image of i.
    """
    r = validate_tree(a)
    if isinstance(a, _Empty):
        return a
    if isinstance(g, dict):
        mapping = dict(g)
    else:
        mapping = {i + 1: v for i, v in enumerate(g)}
    if sorted(mapping) != list(range(1, r + 1)) or sorted(mapping.values()) != list(
        range(1, r + 1)
    ):
        raise TreeError(f"not a permutation of 1..{r}: {mapping}")
    return _relabel(a, lambda k: mapping[k])


def leaf_order(a: Tree) -> list[int]:
    """Labels read left to right ('forgetting the parenthesization')."""
    return leaf_labels(a)


# ---------------------------------------------------------------------------
# Colored composition


def _map_colored(t, f):
    """Apply f(leaf)->leaf-or-subtree to every leaf, keeping structure."""
    if isinstance(t, (ClosedLeaf, OpenLeaf)):
        return f(t)
    if isinstance(t, Tau):
        return Tau(_map_colored(t.child, f))
    if isinstance(t, Node):
        return Node(_map_colored(t.left, f), _map_colored(t.right, f))
    raise TreeError(f"not a colored tree: {t!r}")


def compose_colored(e: Tree, p: int, x: Tree) -> Tree:
    """Colored operad composition at the leaf labeled ``p``.

    Allowed cases: closed slot with c-colored ``x``, open slot with
    o-colored ``x``, or two c-colored trees.  Closed leaves are
    referenced by bold label (1..r), open leaves by label r+1..r+s.
    """
    re_, se, ecol = validate_colored(e)
    rx, sx, xcol = validate_colored(x)

    if ecol == "c" and xcol == "c":
        # plain magma composition on bold labels
        if not 1 <= p <= re_:
            raise TreeError(f"closed slot {p} out of range 1..{re_}")
        plain = compose(_map_colored(e, lambda lf: Leaf(lf.label)), p,
                        _map_colored(x, lambda lf: Leaf(lf.label)))
        return _map_colored_plain(plain, closed=True)

    if p <= re_:
        if xcol != "c":
            raise TreeError(f"slot {p} is closed but the argument is {xcol}-colored")
        # insert a c-tree at a closed leaf: standard shift on closed labels
        def repl(lf):
            if isinstance(lf, ClosedLeaf):
                if lf.label == p:
                    return _map_colored(x, lambda y: ClosedLeaf(y.label + p - 1))
                return ClosedLeaf(lf.label + rx - 1) if lf.label > p else lf
            return lf

        merged = _map_colored(e, repl)
        return _renumber_opens(merged, re_ + rx - 1)

    if p <= re_ + se:
        if xcol != "o":
            raise TreeError(f"slot {p} is open but the argument is {xcol}-colored")

        def repl(lf):
            if isinstance(lf, OpenLeaf) and lf.label == p:
                return _map_colored(
                    x,
                    lambda y: ClosedLeaf(y.label + re_)
                    if isinstance(y, ClosedLeaf)
                    else y,
                )
            return lf

        merged = _map_colored(e, repl)
        return _renumber_opens(merged, re_ + rx)

    raise TreeError(f"leaf reference {p} out of range for (r,s)=({re_},{se})")


def _map_colored_plain(t, closed):
    if isinstance(t, Leaf):
        return ClosedLeaf(t.label) if closed else OpenLeaf(t.label)
    return Node(_map_colored_plain(t.left, closed), _map_colored_plain(t.right, closed))


def _renumber_opens(t, r_new):
    """Renumber open leaves left to right as r_new+1, r_new+2, ..."""
    counter = itertools.count(r_new + 1)

    def repl(lf):
        if isinstance(lf, OpenLeaf):
            return OpenLeaf(next(counter))
        return lf

    out = _map_colored(t, repl)
    validate_colored(out)
    return out


# ---------------------------------------------------------------------------
# Doubling


def doubled_labels(e: Tree) -> dict[int, tuple[str, int]]:
    """Map each doubled-tree label to its coordinate meaning.

    Closed label k of the colored tree becomes ('z', k) at 2k-1 and
    ('zbar', k) at 2k; open label r+j becomes ('x', j) at 2r+j.
    """
    r, s, color = validate_colored(e)
    if color != "o":
        raise TreeError("doubling is defined for o-colored trees")
    out = {}
    for k in range(1, r + 1):
        out[2 * k - 1] = ("z", k)
        out[2 * k] = ("zbar", k)
    for j in range(1, s + 1):
        out[2 * r + j] = ("x", j)
    return out


def doubling(e: Tree) -> Tree:
    """Double the Tau blocks: each Tau subtree T becomes Node(T, T-bar).

    The result is a plain tree on 2r+s leaves with the fixed label
    convention of :func:`doubled_labels`.
    """
    r, s, color = validate_colored(e)
    if color != "o":
        raise TreeError("doubling is defined for o-colored trees")

    def build(x):
        if isinstance(x, OpenLeaf):
            return Leaf(2 * r + (x.label - r))
        if isinstance(x, Tau):
            z = _map_colored(x.child, lambda lf: ClosedLeaf(lf.label))
            plain = _map_colored(z, lambda lf: Leaf(2 * lf.label - 1))
            bar = _map_colored(z, lambda lf: Leaf(2 * lf.label))
            return Node(_as_plain(plain), _as_plain(bar))
        if isinstance(x, Node):
            return Node(build(x.left), build(x.right))
        raise TreeError(f"unexpected node {x!r}")

    def _as_plain(t):
        if isinstance(t, Leaf):
            return t
        return Node(_as_plain(t.left), _as_plain(t.right))

    out = build(e)
    validate_tree(out)
    return out


def doubled_compose(e: Tree, p: int, x: Tree) -> Tree:
    """Compose the doubled trees directly, with the canonical relabeling.

    This is the image of colored composition under the doubling map,
    computed independently: plain compose at the doubled slot(s), then
    the coordinate-tracking renumbering back to the fixed convention.
    Used as the second route in the doubling-functoriality tests.
    """
    re_, se, _ = validate_colored(e)
    rx, sx, xcol = validate_colored(x)
    etil = doubling(e)

    if p <= re_:
        if xcol != "c":
            raise TreeError("closed slot needs a c-colored argument")
        t = rx
        plain_x = _map_colored(x, lambda lf: Leaf(lf.label))
        step1 = compose(etil, 2 * p - 1, plain_x)
        step2 = compose(step1, 2 * p + t - 1, plain_x)
        # interleave the two contiguous copies back into z/zbar pairs
        relabel = {}
        for i in range(1, t + 1):
            relabel[2 * p - 2 + i] = 2 * p + 2 * i - 3
            relabel[2 * p + t - 2 + i] = 2 * p + 2 * i - 2
        return _relabel(step2, lambda k: relabel.get(k, k))

    if xcol != "o":
        raise TreeError("open slot needs an o-colored argument")
    j = p - re_
    q = 2 * re_ + j
    xtil = doubling(x)
    plain = compose(etil, q, xtil)
    r_new = re_ + rx
    relabel = {}
    for jp in range(1, j):  # earlier open leaves of e
        relabel[2 * re_ + jp] = 2 * r_new + jp
    for k in range(1, rx + 1):  # closed pairs of x
        relabel[q - 1 + 2 * k - 1] = 2 * (re_ + k) - 1
        relabel[q - 1 + 2 * k] = 2 * (re_ + k)
    for jpp in range(1, sx + 1):  # open leaves of x
        relabel[q - 1 + 2 * rx + jpp] = 2 * r_new + j + jpp - 1
    for jp in range(j + 1, se + 1):  # later open leaves of e, already shifted
        relabel[2 * re_ + jp + 2 * rx + sx - 1] = 2 * r_new + jp + sx - 1
    return _relabel(plain, lambda k: relabel.get(k, k))


# ---------------------------------------------------------------------------
# Enumeration (exhaustive tests and small searches)


def all_trees(labels: Sequence[int]) -> Iterator[Tree]:
    """All plain binary trees on the given label set (shapes x labelings)."""
    labels = tuple(labels)
    if not labels:
        yield EMPTY
        return
    if len(labels) == 1:
        yield Leaf(labels[0])
        return
    items = list(labels)
    n = len(items)
    for mask in range(1, 2 ** n - 1):
        left = tuple(items[i] for i in range(n) if mask >> i & 1)
        right = tuple(items[i] for i in range(n) if not mask >> i & 1)
        for lt in all_trees(left):
            for rt in all_trees(right):
                yield Node(lt, rt)


def shape_of(t: Tree):
    """Shape with labels erased, as a nested tuple."""
    if isinstance(t, Leaf):
        return "*"
    if isinstance(t, Node):
        return (shape_of(t.left), shape_of(t.right))
    raise TreeError(f"not a plain tree: {t!r}")


def all_shapes(n: int) -> set:
    return {shape_of(t) for t in all_trees(range(1, n + 1))}


def _splits(seq):
    for i in range(len(seq) + 1):
        yield seq[:i], seq[i:]


def _subsets(seq):
    for mask in range(2 ** len(seq)):
        yield tuple(s for i, s in enumerate(seq) if mask >> i & 1), tuple(
            s for i, s in enumerate(seq) if not mask >> i & 1
        )


def all_colored_trees(r: int, s: int) -> Iterator[Tree]:
    """All o-colored trees with closed labels 1..r and open labels r+1..r+s."""

    def gen(closed, opens):
        if len(closed) + len(opens) == 0:
            return
        if not closed and len(opens) == 1:
            yield OpenLeaf(opens[0])
            return
        if not opens and closed:
            for ct in all_trees(closed):
                yield Tau(_map_colored_plain(ct, closed=True))
        for cl, cr in _subsets(closed):
            for ol, orr in _splits(opens):
                if (not cl and not ol) or (not cr and not orr):
                    continue
                for lt in gen(cl, ol):
                    for rt in gen(cr, orr):
                        yield Node(lt, rt)

    yield from gen(tuple(range(1, r + 1)), tuple(range(r + 1, r + s + 1)))
