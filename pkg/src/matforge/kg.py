"""Knowledge graphs: nodes with co-references and context, typed edges, scoring.

A node records the most descriptive surface form as ``node_name``,
alternative expressions under ``co_references``, and disambiguating
key/value context under ``related_entities`` (e.g. a synthesis method that
separates two otherwise identically named materials). Edges connect nodes
through schema-declared relation labels.

Scoring matches predicted nodes to gold nodes one-to-one by maximum
matching under :func:`node_match`; relations count only when both endpoints
matched and the normalized label agrees, so node errors propagate
structurally into relation scores.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .ner_eval import EvalReport, MatchCounts, report_from_counts
from .schema import EntitySchema

Mode = str  # "strict" | "lenient"

_WS_RE = re.compile(r"\s+")

# NFKC folds most compatibility forms, but a few sub/superscript digits can
# survive odd normalization states; map them explicitly.
_SCRIPT_DIGITS = str.maketrans(
    "₀₁₂₃₄₅₆₇₈₉⁰¹²³⁴⁵⁶⁷⁸⁹",
    "01234567890123456789",
)


class KgError(ValueError):
    pass


class NotJson(KgError):
    pass


class SchemaViolation(KgError):
    pass


class DanglingEdge(KgError):
    pass


def normalize_name(s: str) -> str:
    """Canonical comparison form: NFKC, casefold, single spaces, ASCII digits."""
    s = unicodedata.normalize("NFKC", s).translate(_SCRIPT_DIGITS)
    return _WS_RE.sub(" ", s.casefold()).strip()


@dataclass(frozen=True)
class KgNode:
    node_name: str
    symbol: str
    co_references: tuple[str, ...] = ()
    related_entities: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "co_references", tuple(self.co_references))
        object.__setattr__(self, "related_entities", tuple(self.related_entities))

    @property
    def name_set(self) -> frozenset[str]:
        """Normalized node_name plus co_references, the match vocabulary."""
        return frozenset(
            normalize_name(n) for n in (self.node_name, *self.co_references)
        )

    def key(self) -> tuple:
        """Identity within a graph: same-named nodes split on related context."""
        return (
            normalize_name(self.node_name),
            self.symbol,
            tuple(sorted((k, normalize_name(v)) for k, v in self.related_entities)),
        )

    def key_str(self) -> str:
        name, symbol, related = self.key()
        return json.dumps([name, symbol, [list(p) for p in related]], separators=(",", ":"))


@dataclass(frozen=True)
class KgEdge:
    source: int  # node index within the owning graph
    relation: str
    target: int


@dataclass(frozen=True)
class KnowledgeGraph:
    doc_id: str
    nodes: tuple[KgNode, ...] = ()
    edges: tuple[KgEdge, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))


def validate_kg(graph: KnowledgeGraph, schema: EntitySchema) -> list[str]:
    """All graph invariants as messages; empty list means valid."""
    violations: list[str] = []
    seen_keys: set[tuple] = set()
    for i, node in enumerate(graph.nodes):
        where = f"nodes[{i}]"
        if not node.node_name.strip():
            violations.append(f"{where}.node_name: empty")
        if not schema.has_symbol(node.symbol):
            violations.append(f"{where}.symbol: unknown symbol {node.symbol!r}")
        for k, _ in node.related_entities:
            if not schema.has_symbol(k):
                violations.append(f"{where}.related_entities: unknown symbol {k!r}")
        key = node.key()
        if key in seen_keys:
            violations.append(f"{where}: duplicate node key {node.node_name!r}")
        seen_keys.add(key)
    relation_index = {
        (normalize_name(r.label), r.source_symbol, r.target_symbol)
        for r in schema.relation_types
    }
    for i, edge in enumerate(graph.edges):
        where = f"edges[{i}]"
        if not (0 <= edge.source < len(graph.nodes)):
            violations.append(f"{where}.source: no node at index {edge.source}")
            continue
        if not (0 <= edge.target < len(graph.nodes)):
            violations.append(f"{where}.target: no node at index {edge.target}")
            continue
        triple = (
            normalize_name(edge.relation),
            graph.nodes[edge.source].symbol,
            graph.nodes[edge.target].symbol,
        )
        if relation_index and triple not in relation_index:
            violations.append(
                f"{where}: relation {edge.relation!r} not declared for "
                f"{triple[1]} -> {triple[2]}"
            )
    return violations


# -- JSON reader / writer ---------------------------------------------------


def _node_from_dict(data: dict[str, Any]) -> KgNode:
    related_raw = data.get("related_entities", [])
    pairs: list[tuple[str, str]] = []
    if isinstance(related_raw, dict):
        related_raw = [related_raw]
    for item in related_raw:
        if isinstance(item, dict):
            pairs.extend((str(k), str(v)) for k, v in item.items())
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            pairs.append((str(item[0]), str(item[1])))
    co_refs = data.get("co_references", [])
    if isinstance(co_refs, str):
        co_refs = [co_refs]
    return KgNode(
        node_name=str(data.get("node_name", "")),
        symbol=str(data.get("symbol", "")),
        co_references=tuple(str(c) for c in co_refs),
        related_entities=tuple(pairs),
    )


def _resolve_endpoint(ref: Any, nodes: tuple[KgNode, ...]) -> int | None:
    """Accept an array index, a canonical key string, or a unique name/co-reference."""
    if isinstance(ref, bool):
        return None
    if isinstance(ref, int):
        return ref if 0 <= ref < len(nodes) else None
    if isinstance(ref, str):
        text = ref.strip()
        if text.lstrip("-").isdigit():
            idx = int(text)
            return idx if 0 <= idx < len(nodes) else None
        for i, node in enumerate(nodes):
            if node.key_str() == text:
                return i
        wanted = normalize_name(text)
        hits = [i for i, node in enumerate(nodes) if wanted in node.name_set]
        if len(hits) == 1:
            return hits[0]
    return None


def _extract_json_object(text: str) -> Any:
    """Best-effort JSON recovery for lenient parsing of model output."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    fenced = re.search(r"```(?:json)?\s*(.*?)```", text, re.DOTALL)
    if fenced:
        try:
            return json.loads(fenced.group(1))
        except json.JSONDecodeError:
            pass
    start = text.find("{")
    end = text.rfind("}")
    if 0 <= start < end:
        try:
            return json.loads(text[start : end + 1])
        except json.JSONDecodeError:
            pass
    raise NotJson("completion is not JSON (after fence/brace recovery)")


def parse_kg(
    text: str,
    schema: EntitySchema,
    mode: Mode = "strict",
    doc_id: str = "",
) -> tuple[KnowledgeGraph, list[str]]:
    """Decode and validate a knowledge-graph JSON document.

    Strict mode raises on the first invalid node, unresolvable edge
    endpoint, or undeclared relation. Lenient mode drops the offending
    element, records a warning, and keeps going; it additionally tolerates
    markdown fences and prose around the JSON object.
    """
    strict = mode == "strict"
    warnings: list[str] = []
    if strict:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise NotJson(f"invalid JSON: {e}") from None
    else:
        data = _extract_json_object(text)
    if not isinstance(data, dict):
        raise NotJson(f"expected a JSON object, got {type(data).__name__}")

    relation_index = {
        (normalize_name(r.label), r.source_symbol, r.target_symbol)
        for r in schema.relation_types
    }
    raw_nodes = data.get("nodes", [])
    raw_edges = data.get("edges", [])
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise NotJson("'nodes' and 'edges' must be arrays")

    nodes: list[KgNode] = []
    seen_keys: set[tuple] = set()
    for i, item in enumerate(raw_nodes):
        if not isinstance(item, dict):
            if strict:
                raise SchemaViolation(f"nodes[{i}]: not an object")
            warnings.append(f"dropped nodes[{i}]: not an object")
            continue
        node = _node_from_dict(item)
        problems = []
        if not node.node_name.strip():
            problems.append("empty node_name")
        if not schema.has_symbol(node.symbol):
            problems.append(f"unknown symbol {node.symbol!r}")
        problems.extend(
            f"unknown related symbol {k!r}"
            for k, _ in node.related_entities
            if not schema.has_symbol(k)
        )
        if not problems and node.key() in seen_keys:
            problems.append(f"duplicate node key for {node.node_name!r}")
        if problems:
            if strict:
                raise SchemaViolation(f"nodes[{i}]: " + "; ".join(problems))
            warnings.append(f"dropped nodes[{i}] ({node.node_name!r}): " + "; ".join(problems))
            continue
        seen_keys.add(node.key())
        nodes.append(node)
    node_tuple = tuple(nodes)

    edges: list[KgEdge] = []
    for i, item in enumerate(raw_edges):
        if not isinstance(item, dict):
            if strict:
                raise SchemaViolation(f"edges[{i}]: not an object")
            warnings.append(f"dropped edges[{i}]: not an object")
            continue
        relation = str(item.get("relation", ""))
        source = _resolve_endpoint(item.get("source"), node_tuple)
        target = _resolve_endpoint(item.get("target"), node_tuple)
        if source is None or target is None:
            which = "source" if source is None else "target"
            if strict:
                raise DanglingEdge(f"edges[{i}].{which}: {item.get(which)!r} resolves to no node")
            warnings.append(f"dropped edges[{i}]: {which} {item.get(which)!r} resolves to no node")
            continue
        triple = (normalize_name(relation), node_tuple[source].symbol, node_tuple[target].symbol)
        if relation_index and triple not in relation_index:
            if strict:
                raise SchemaViolation(
                    f"edges[{i}]: relation {relation!r} not declared for "
                    f"{triple[1]} -> {triple[2]}"
                )
            warnings.append(
                f"dropped edges[{i}]: relation {relation!r} not declared for "
                f"{triple[1]} -> {triple[2]}"
            )
            continue
        edges.append(KgEdge(source, relation, target))

    graph = KnowledgeGraph(
        doc_id=str(data.get("doc_id", doc_id)) or doc_id,
        nodes=node_tuple,
        edges=tuple(edges),
    )
    return graph, warnings


def kg_from_dict(data: dict[str, Any], doc_id: str = "") -> KnowledgeGraph:
    """Structural decode of writer output (index endpoints), no schema checks."""
    nodes = tuple(_node_from_dict(item) for item in data.get("nodes", []))
    edges = []
    for item in data.get("edges", []):
        source = _resolve_endpoint(item.get("source"), nodes)
        target = _resolve_endpoint(item.get("target"), nodes)
        if source is None or target is None:
            raise DanglingEdge(f"edge {item!r} references a missing node")
        edges.append(KgEdge(source, str(item.get("relation", "")), target))
    return KnowledgeGraph(
        doc_id=str(data.get("doc_id", doc_id)) or doc_id,
        nodes=nodes,
        edges=tuple(edges),
    )


def kg_to_dict(graph: KnowledgeGraph) -> dict[str, Any]:
    """Writer form: nodes in order, edge endpoints as array indices."""
    return {
        "doc_id": graph.doc_id,
        "nodes": [
            {
                "node_name": n.node_name,
                "symbol": n.symbol,
                "co_references": list(n.co_references),
                "related_entities": [{k: v} for k, v in n.related_entities],
            }
            for n in graph.nodes
        ],
        "edges": [
            {"source": e.source, "relation": e.relation, "target": e.target}
            for e in graph.edges
        ],
    }


def dump_kg(graph: KnowledgeGraph) -> str:
    return json.dumps(kg_to_dict(graph), indent=2, ensure_ascii=False) + "\n"


# -- matching and scoring ----------------------------------------------------


def node_match(pred: KgNode, gold: KgNode) -> bool:
    """Contextual equivalence: same symbol, overlapping name vocabulary,
    and no related-entity key present on both sides with conflicting values.

    Compatibility (rather than equality) of related_entities lets a
    prediction that omits context still match; the field only *separates*
    nodes whose names alone are ambiguous.
    """
    if pred.symbol != gold.symbol:
        return False
    if not (pred.name_set & gold.name_set):
        return False
    gold_related = dict((k, normalize_name(v)) for k, v in gold.related_entities)
    for k, v in pred.related_entities:
        if k in gold_related and normalize_name(v) != gold_related[k]:
            return False
    return True


def _max_matching_size(adjacency: list[list[int]], n_right: int) -> int:
    """Maximum bipartite matching cardinality (Kuhn's augmenting paths)."""
    match_right: list[int] = [-1] * n_right

    def try_assign(u: int, visited: list[bool]) -> bool:
        for v in adjacency[u]:
            if visited[v]:
                continue
            visited[v] = True
            if match_right[v] == -1 or try_assign(match_right[v], visited):
                match_right[v] = u
                return True
        return False

    size = 0
    for u in range(len(adjacency)):
        if try_assign(u, [False] * n_right):
            size += 1
    return size


# Complete maximum matchings examined when breaking ties by relation
# agreement; beyond this the best found so far wins (still deterministic).
_MAX_TIE_BREAK_MATCHINGS = 20_000


def max_node_assignment(
    pred_nodes: Iterable[KgNode],
    gold_nodes: Iterable[KgNode],
    pred_edges: Iterable[KgEdge] = (),
    gold_edges: Iterable[KgEdge] = (),
) -> dict[int, int]:
    """One-to-one maximum matching of pred onto gold under node_match.

    When several matchings reach the maximum cardinality (interchangeable
    same-name nodes), the one agreeing with the most edges wins, searched in
    canonical node order so the result never depends on input ordering.
    """
    preds = list(pred_nodes)
    golds = list(gold_nodes)
    pred_order = sorted(range(len(preds)), key=lambda i: (preds[i].key_str(), i))
    gold_order = sorted(range(len(golds)), key=lambda j: (golds[j].key_str(), j))
    adjacency = [
        [j for j in gold_order if node_match(preds[i], golds[j])] for i in pred_order
    ]
    target = _max_matching_size(adjacency, len(golds))

    gold_edge_pool: dict[tuple[int, str, int], int] = {}
    for e in gold_edges:
        key = (e.source, normalize_name(e.relation), e.target)
        gold_edge_pool[key] = gold_edge_pool.get(key, 0) + 1
    pred_edge_list = [
        (e.source, normalize_name(e.relation), e.target) for e in pred_edges
    ]

    def relation_agreement(assignment: dict[int, int]) -> int:
        pool = dict(gold_edge_pool)
        agreed = 0
        for src, label, tgt in pred_edge_list:
            a, b = assignment.get(src), assignment.get(tgt)
            if a is None or b is None:
                continue
            key = (a, label, b)
            if pool.get(key, 0) > 0:
                pool[key] -= 1
                agreed += 1
        return agreed

    best: dict[str, Any] = {"assignment": {}, "agreement": -1, "examined": 0}

    def search(pos: int, used: set[int], assignment: dict[int, int], matched: int) -> None:
        if best["examined"] >= _MAX_TIE_BREAK_MATCHINGS:
            return
        remaining = len(pred_order) - pos
        if matched + remaining < target:
            return  # cannot reach maximum cardinality any more
        if pos == len(pred_order):
            if matched == target:
                best["examined"] += 1
                agreement = relation_agreement(assignment)
                if agreement > best["agreement"]:
                    best["agreement"] = agreement
                    best["assignment"] = dict(assignment)
            return
        i = pred_order[pos]
        for j in adjacency[pos]:
            if j in used:
                continue
            used.add(j)
            assignment[i] = j
            search(pos + 1, used, assignment, matched + 1)
            del assignment[i]
            used.remove(j)
        search(pos + 1, used, assignment, matched)

    search(0, set(), {}, 0)
    return best["assignment"]


def score_kg(
    pred: KnowledgeGraph, gold: KnowledgeGraph
) -> tuple[EvalReport, EvalReport, dict[int, int]]:
    """Node and relation reports plus the node assignment used.

    Node TPs are matched pairs; relation TPs need both endpoints matched
    and an unconsumed gold edge with the same normalized label between the
    assigned nodes. Everything is order-independent.
    """
    assignment = max_node_assignment(pred.nodes, gold.nodes, pred.edges, gold.edges)
    node_counts = _node_counts(pred, gold, assignment)
    relation_counts = _relation_counts(pred, gold, assignment)
    return (
        report_from_counts(node_counts),
        report_from_counts(relation_counts),
        assignment,
    )


def _node_counts(
    pred: KnowledgeGraph, gold: KnowledgeGraph, assignment: Mapping[int, int]
) -> dict[str, MatchCounts]:
    counts: dict[str, MatchCounts] = {}

    def bump(symbol: str, **kw: int) -> None:
        counts[symbol] = counts.get(symbol, MatchCounts()) + MatchCounts(**kw)

    matched_gold = set(assignment.values())
    for i, node in enumerate(pred.nodes):
        if i in assignment:
            bump(node.symbol, tp=1)
        else:
            bump(node.symbol, fp=1)
    for j, node in enumerate(gold.nodes):
        if j not in matched_gold:
            bump(node.symbol, fn=1)
    return counts


def _relation_counts(
    pred: KnowledgeGraph, gold: KnowledgeGraph, assignment: Mapping[int, int]
) -> dict[str, MatchCounts]:
    gold_pool: dict[tuple[int, str, int], int] = {}
    for e in gold.edges:
        key = (e.source, normalize_name(e.relation), e.target)
        gold_pool[key] = gold_pool.get(key, 0) + 1

    counts: dict[str, MatchCounts] = {}

    def bump(label: str, **kw: int) -> None:
        counts[label] = counts.get(label, MatchCounts()) + MatchCounts(**kw)

    for e in pred.edges:
        label = normalize_name(e.relation)
        src = assignment.get(e.source)
        tgt = assignment.get(e.target)
        key = (src, label, tgt) if src is not None and tgt is not None else None
        if key is not None and gold_pool.get(key, 0) > 0:
            gold_pool[key] -= 1
            bump(label, tp=1)
        else:
            bump(label, fp=1)
    for (_, label, _), remaining in gold_pool.items():
        if remaining:
            bump(label, fn=remaining)
    return counts
