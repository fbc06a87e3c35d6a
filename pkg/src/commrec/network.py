"""Communication network model and link-disjoint Steiner tree (LDST) routing.

Trees are grown outward from the operating center, one per root-adjacent
link, and claim links exclusively so that the family is pairwise
link-disjoint. Sensors are then assigned to trees; the constrained plan caps
the share of any one cluster carried by a single tree.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import networkx as nx

Link = tuple[str, str]

# float slack when turning alpha * |C_k| into an integer cap (0.3 * 10 = 2.9999...)
_CAP_EPS = 1e-9


class TopologyError(ValueError):
    """The topology document is malformed or violates a network invariant."""


class InfeasiblePlanError(ValueError):
    """No link-disjoint tree family/assignment satisfies the requested constraints."""


def link_key(a, b) -> Link:
    a, b = str(a), str(b)
    return (a, b) if a <= b else (b, a)


@dataclass
class CommNetwork:
    nodes: list[str]
    links: dict[Link, int]
    root: str
    sensor_sites: dict[str, str]

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.nodes))
        for (a, b), ch in sorted(self.links.items()):
            g.add_edge(a, b, channels=ch)
        return g

    @cached_property
    def link_list(self) -> list[Link]:
        """Links in canonical sorted order; failure scenarios index into this list."""
        return sorted(self.links)

    @cached_property
    def link_index(self) -> dict[Link, int]:
        return {lk: i for i, lk in enumerate(self.link_list)}

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "links": [{"a": a, "b": b, "channels": ch} for (a, b), ch in sorted(self.links.items())],
            "root": self.root,
            "sensors": [{"id": s, "node": n} for s, n in self.sensor_sites.items()],
        }


def load_network(document: str | dict) -> CommNetwork:
    """Parse and validate a topology document (JSON text or an already-parsed dict)."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TopologyError(f"parse error: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise TopologyError("parse error: topology must be a JSON object")
    for key in ("nodes", "links", "root"):
        if key not in doc:
            raise TopologyError(f"parse error: missing key {key!r}")

    nodes = [str(n) for n in doc["nodes"]]
    if len(set(nodes)) != len(nodes):
        raise TopologyError("duplicate node id")
    node_set = set(nodes)
    root = str(doc["root"])
    if root not in node_set:
        raise TopologyError(f"root missing: {root!r} is not a node")

    links: dict[Link, int] = {}
    for item in doc["links"]:
        try:
            a, b = str(item["a"]), str(item["b"])
        except (KeyError, TypeError):
            raise TopologyError(f"parse error: bad link entry {item!r}") from None
        if a == b:
            raise TopologyError(f"self-loop at node {a!r}")
        if a not in node_set or b not in node_set:
            raise TopologyError(f"link ({a}, {b}) references an unknown node")
        ch = item.get("channels", 1)
        if not isinstance(ch, int) or isinstance(ch, bool) or ch < 1:
            raise TopologyError(f"link ({a}, {b}): channels must be a positive integer")
        key = link_key(a, b)
        if key in links:
            raise TopologyError(f"duplicate link ({a}, {b})")
        links[key] = ch

    sites: dict[str, str] = {}
    for item in doc.get("sensors", []):
        try:
            sid, node = str(item["id"]), str(item["node"])
        except (KeyError, TypeError):
            raise TopologyError(f"parse error: bad sensor entry {item!r}") from None
        if sid in sites:
            raise TopologyError(f"duplicate sensor id {sid!r}")
        if node not in node_set:
            raise TopologyError(f"sensor {sid!r} sits on unknown node {node!r}")
        sites[sid] = node

    net = CommNetwork(nodes, links, root, sites)
    reachable = nx.node_connected_component(net.graph, root)
    for sid, node in sites.items():
        if node not in reachable:
            raise TopologyError(f"disconnected sensor site: {sid!r} at {node!r} cannot reach root")
    return net


def read_network(path: str | Path) -> CommNetwork:
    return load_network(Path(path).read_text())


@dataclass
class LdstPlan:
    """A link-disjoint tree family plus each sensor's tree and route to the root.

    ``alpha`` maps cluster index to its spreading cap; it is ``None`` for
    plans built without the cap (baseline routing).
    """

    root: str
    trees: list[list[Link]]
    assignment: dict[str, int]
    root_path: dict[str, list[Link]]
    clusters: dict[str, int]
    sites: dict[str, str]
    alpha: dict[int, float] | None = None
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    def tree_share(self) -> dict[int, list[float]]:
        """Per cluster, the fraction of its sensors carried by each tree."""
        out: dict[int, list[float]] = {}
        sizes: dict[int, int] = {}
        for s, k in self.clusters.items():
            sizes[k] = sizes.get(k, 0) + 1
        for k, size in sizes.items():
            counts = [0] * self.tree_count
            for s, kk in self.clusters.items():
                if kk == k and s in self.assignment:
                    counts[self.assignment[s]] += 1
            out[k] = [c / size for c in counts]
        return out

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "seed": self.seed,
            "alpha": None if self.alpha is None else {str(k): v for k, v in sorted(self.alpha.items())},
            "trees": [[list(lk) for lk in tree] for tree in self.trees],
            "assignment": dict(sorted(self.assignment.items())),
            "root_paths": {s: [list(lk) for lk in p] for s, p in sorted(self.root_path.items())},
            "clusters": dict(sorted(self.clusters.items())),
            "sites": dict(sorted(self.sites.items())),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LdstPlan":
        alpha = doc.get("alpha")
        return cls(
            root=str(doc["root"]),
            trees=[[link_key(*lk) for lk in tree] for tree in doc["trees"]],
            assignment={str(s): int(m) for s, m in doc["assignment"].items()},
            root_path={str(s): [tuple(map(str, lk)) for lk in p] for s, p in doc["root_paths"].items()},
            clusters={str(s): int(k) for s, k in doc.get("clusters", {}).items()},
            sites={str(s): str(n) for s, n in doc.get("sites", {}).items()},
            alpha=None if alpha is None else {int(k): float(v) for k, v in alpha.items()},
            seed=int(doc.get("seed", 0)),
            meta=doc.get("meta", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "LdstPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def check_plan(plan: LdstPlan) -> list[str]:
    """Return every invariant violation found in ``plan`` (empty list = valid)."""
    problems: list[str] = []

    owner: dict[Link, int] = {}
    for m, tree in enumerate(plan.trees):
        for lk in tree:
            lk = link_key(*lk)
            if lk in owner and owner[lk] != m:
                problems.append(
                    f"link-disjointness violated: link {lk} shared by trees {owner[lk]} and {m}"
                )
            owner.setdefault(lk, m)

    tree_graphs = []
    for m, tree in enumerate(plan.trees):
        g = nx.Graph()
        g.add_node(plan.root)
        g.add_edges_from(tree)
        tree_graphs.append(g)
        if len(set(map(lambda lk: link_key(*lk), tree))) != len(tree):
            problems.append(f"tree {m}: repeated link")
        if not nx.is_connected(g):
            problems.append(f"tree {m}: not connected to root")
        elif g.number_of_edges() != g.number_of_nodes() - 1:
            problems.append(f"tree {m}: contains a cycle")

    for s, m in plan.assignment.items():
        if not 0 <= m < plan.tree_count:
            problems.append(f"sensor {s}: assigned to nonexistent tree {m}")
            continue
        site = plan.sites.get(s)
        g = tree_graphs[m]
        if site is None:
            problems.append(f"sensor {s}: unknown site")
            continue
        if site not in g:
            problems.append(f"sensor {s}: site {site} is not on tree {m}")
        path = plan.root_path.get(s)
        if path is None:
            problems.append(f"sensor {s}: missing root path")
            continue
        here = site
        for lk in path:
            a, b = lk
            if not g.has_edge(a, b):
                problems.append(f"sensor {s}: root path uses link {tuple(lk)} not on tree {m}")
                break
            if here not in (a, b):
                problems.append(f"sensor {s}: root path is not a contiguous walk")
                break
            here = b if here == a else a
        else:
            if here != plan.root:
                problems.append(f"sensor {s}: root path ends at {here}, not the root")

    if plan.alpha is not None:
        for k, shares in sorted(plan.tree_share().items()):
            cap = plan.alpha.get(k)
            if cap is None:
                problems.append(f"cluster {k}: no alpha recorded")
                continue
            for m, share in enumerate(shares):
                if share > cap + 1e-12:
                    problems.append(
                        f"spreading cap violated: cluster {k} routes {share:.3f} of its sensors "
                        f"through tree {m} (alpha {cap})"
                    )
    return problems


def cluster_cap(size: int, alpha: float) -> int:
    """Largest per-tree sensor count keeping the share within ``alpha``."""
    return int(math.floor(alpha * size + _CAP_EPS))


def _available_graph(net: CommNetwork, link_usage: dict[Link, int] | None) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(sorted(net.nodes))
    for lk, ch in sorted(net.links.items()):
        used = 0 if link_usage is None else link_usage.get(lk, 0)
        if ch - used > 0:
            g.add_edge(*lk)
    return g


def _nearest_target_path(g: nx.Graph, claimed: set[Link], sources: set[str], targets: set[str]):
    """BFS over unclaimed links from a tree's nodes; path to the closest target.

    Ties go to the lowest node id at the minimal hop distance.
    """
    parent: dict[str, str | None] = {s: None for s in sources}
    frontier = sorted(sources)
    while frontier:
        hits = sorted(n for n in frontier if n in targets)
        if hits:
            node = hits[0]
            path = []
            while parent[node] is not None:
                path.append(link_key(parent[node], node))
                node = parent[node]
            return path
        nxt = []
        for u in frontier:
            for v in sorted(g.neighbors(u)):
                if v in parent or link_key(u, v) in claimed:
                    continue
                parent[v] = u
                nxt.append(v)
        frontier = sorted(nxt)
    return None


def grow_trees(
    net: CommNetwork,
    tree_count: int | str = "auto",
    link_usage: dict[Link, int] | None = None,
) -> list[list[Link]]:
    """Grow a link-disjoint tree family outward from the root.

    Tree m starts on the m-th root-adjacent link (far-end degree descending,
    then node id). Trees then take turns attaching their nearest uncovered
    sensor site by a shortest path over links no tree has claimed, until no
    tree can reach another site.
    """
    g = _available_graph(net, link_usage)
    root = net.root
    seeds = sorted(g.neighbors(root), key=lambda v: (-g.degree(v), v))
    if tree_count == "auto":
        tree_count = len(seeds)
    tree_count = int(tree_count)
    if tree_count < 1:
        raise InfeasiblePlanError("tree_count must be positive")
    if tree_count > len(seeds):
        raise InfeasiblePlanError(
            f"infeasible: {tree_count} trees requested but the root has only {len(seeds)} usable links"
        )

    claimed: set[Link] = set()
    nodes: list[set[str]] = []
    trees: list[list[Link]] = []
    for v in seeds[:tree_count]:
        lk = link_key(root, v)
        claimed.add(lk)
        nodes.append({root, v})
        trees.append([lk])

    targets = set(net.sensor_sites.values()) - {root}
    active = [True] * tree_count
    while any(active):
        for m in range(tree_count):
            if not active[m]:
                continue
            path = _nearest_target_path(g, claimed, nodes[m], targets - nodes[m])
            if path is None:
                active[m] = False
                continue
            for lk in path:
                claimed.add(lk)
                trees[m].append(lk)
                nodes[m].update(lk)
    return [sorted(t) for t in trees]


def _tree_paths(root: str, tree: list[Link]) -> dict[str, list[Link]]:
    """Route from every tree node to the root, as an ordered link list."""
    adj: dict[str, list[str]] = {}
    for a, b in tree:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    paths: dict[str, list[Link]] = {root: []}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(adj.get(u, [])):
            if v not in paths:
                paths[v] = [link_key(u, v), *paths[u]]
                queue.append(v)
    return paths


def _resolve_alpha(alpha, cluster_ids) -> dict[int, float]:
    if isinstance(alpha, dict):
        out = {int(k): float(v) for k, v in alpha.items()}
        missing = set(cluster_ids) - set(out)
        if missing:
            raise ValueError(f"alpha missing for clusters {sorted(missing)}")
    else:
        out = {k: float(alpha) for k in cluster_ids}
    for k, a in out.items():
        if not 0.0 < a <= 1.0:
            raise ValueError(f"alpha for cluster {k} must lie in (0, 1], got {a}")
    return out


def _membership(clusters) -> dict[str, int]:
    return dict(clusters.membership) if hasattr(clusters, "membership") else dict(clusters)


def _sensor_order(net: CommNetwork, membership: dict[str, int]) -> list[str]:
    unknown = set(membership) - set(net.sensor_sites)
    if unknown:
        raise TopologyError(f"clustered sensors without a site: {sorted(unknown)}")
    return sorted(membership)


def build_ldst_plan(
    net: CommNetwork,
    clusters,
    alpha: float | dict[int, float] = 0.3,
    tree_count: int | str = "auto",
    seed: int = 0,
    link_usage: dict[Link, int] | None = None,
) -> LdstPlan:
    """Route every sensor over a link-disjoint tree family under the spreading cap.

    Each cluster's sensors are matched to covering trees by a min-cost flow
    (cost = hop length of the root path) in which every tree accepts at most
    ``floor(alpha * |C_k|)`` sensors of cluster k.

    Raises
    ------
    InfeasiblePlanError
        If the cap cannot be honored with the available trees.
    """
    membership = _membership(clusters)
    sensors = _sensor_order(net, membership)
    by_cluster: dict[int, list[str]] = {}
    for s in sensors:
        by_cluster.setdefault(membership[s], []).append(s)
    alphas = _resolve_alpha(alpha, sorted(by_cluster))

    for k, members in by_cluster.items():
        if cluster_cap(len(members), alphas[k]) < 1:
            raise InfeasiblePlanError(
                f"infeasible: alpha {alphas[k]} allows zero sensors per tree for cluster {k} "
                f"of size {len(members)}"
            )

    trees = grow_trees(net, tree_count, link_usage)
    paths = [_tree_paths(net.root, t) for t in trees]
    for k, members in by_cluster.items():
        cap = cluster_cap(len(members), alphas[k])
        if cap * len(trees) < len(members):
            raise InfeasiblePlanError(
                f"infeasible: cluster {k} needs {math.ceil(len(members) / cap)} trees at alpha "
                f"{alphas[k]}, only {len(trees)} available"
            )

    assignment: dict[str, int] = {}
    for k in sorted(by_cluster):
        members = by_cluster[k]
        cap = cluster_cap(len(members), alphas[k])
        flow = nx.DiGraph()
        flow.add_node("src", demand=-len(members))
        flow.add_node("sink", demand=len(members))
        for m in range(len(trees)):
            flow.add_edge(("t", m), "sink", capacity=cap, weight=0)
        for s in members:
            site = net.sensor_sites[s]
            covering = [m for m in range(len(trees)) if site in paths[m]]
            if not covering:
                raise InfeasiblePlanError(f"sensor {s!r} at {site!r} is not reachable by any tree")
            flow.add_edge("src", ("s", s), capacity=1, weight=0)
            for m in covering:
                # tree index breaks ties between equal-length routes
                flow.add_edge(("s", s), ("t", m), capacity=1,
                              weight=len(paths[m][site]) * (len(trees) + 1) + m)
        try:
            result = nx.network_simplex(flow)[1]
        except nx.NetworkXUnfeasible:
            raise InfeasiblePlanError(
                f"infeasible: cluster {k} cannot be spread over the trees at alpha {alphas[k]}"
            ) from None
        for s in members:
            for (_, m), f in result[("s", s)].items():
                if f > 0:
                    assignment[s] = m

    return _finish_plan(net, trees, paths, assignment, membership, alphas, seed, constrained=True)


def build_unconstrained_plan(
    net: CommNetwork,
    clusters,
    tree_count: int | str = "auto",
    seed: int = 0,
    link_usage: dict[Link, int] | None = None,
) -> LdstPlan:
    """Same tree family, but every sensor takes its shortest covering route (no spreading cap)."""
    membership = _membership(clusters)
    sensors = _sensor_order(net, membership)
    trees = grow_trees(net, tree_count, link_usage)
    paths = [_tree_paths(net.root, t) for t in trees]
    assignment = {}
    for s in sensors:
        site = net.sensor_sites[s]
        covering = [(len(paths[m][site]), m) for m in range(len(trees)) if site in paths[m]]
        if not covering:
            raise InfeasiblePlanError(f"sensor {s!r} at {site!r} is not reachable by any tree")
        assignment[s] = min(covering)[1]
    return _finish_plan(net, trees, paths, assignment, membership, None, seed, constrained=False)


def _finish_plan(net, trees, paths, assignment, membership, alphas, seed, constrained):
    root_path = {s: list(paths[m][net.sensor_sites[s]]) for s, m in assignment.items()}
    return LdstPlan(
        root=net.root,
        trees=trees,
        assignment=dict(sorted(assignment.items())),
        root_path=dict(sorted(root_path.items())),
        clusters=dict(sorted(membership.items())),
        sites={s: net.sensor_sites[s] for s in sorted(assignment)},
        alpha=alphas,
        seed=seed,
        meta={"constrained": constrained},
    )


def channel_usage(plans: list[LdstPlan]) -> dict[Link, int]:
    """Channels consumed per physical link by several measurement families' plans."""
    usage: dict[Link, int] = {}
    for plan in plans:
        for tree in plan.trees:
            for lk in tree:
                usage[lk] = usage.get(lk, 0) + 1
    return usage
