"""Experience-sharing surfaces: blogs, the tutors' forum, its tag taxonomy.

Student blogs publish directly; group-blog posts wait in `submitted` until
the group leader publishes or rejects them. Forum discussions are indexed by
an evolving three-root taxonomy: tutors propose provisional subjects that
are immediately taggable, managers establish, rename or merge them. The
three roots are fixed for the life of the course.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime

from .canon import dt_to_iso
from .domain import Course, ProjectGroup, TUTOR_ROLE_TAG_LABELS, TutorRoleTag
from .errors import NotFoundError, StateError, ValidationError
from .events import Entry, EntryKind

ROOT_ROLES = "roles-and-tasks"
ROOT_CALENDAR = "project-calendar"
ROOT_PROGRESS = "group-progress"

ROOT_LABELS = {
    ROOT_ROLES: "roles and tasks",
    ROOT_CALENDAR: "project calendar",
    ROOT_PROGRESS: "group progress",
}


@dataclass
class TaxonomyNode:
    id: str
    label: str
    parent_id: str | None
    status: str = "established"  # "established" | "provisional"
    proposed_by: str | None = None


class Taxonomy:
    """Three-root subject tree; mutations keep it acyclic and label-unique."""

    def __init__(self):
        self.nodes: dict[str, TaxonomyNode] = {}
        for root_id, label in ROOT_LABELS.items():
            self.nodes[root_id] = TaxonomyNode(root_id, label, None)

    @classmethod
    def seeded(cls, course: Course) -> "Taxonomy":
        """Initial tree: tutor postures, the phase calendar, one node per group."""
        tax = cls()
        for tag in TutorRoleTag:
            node_id = f"{ROOT_ROLES}.{tag.value.replace('_', '-')}"
            tax.nodes[node_id] = TaxonomyNode(node_id, TUTOR_ROLE_TAG_LABELS[tag], ROOT_ROLES)
        for phase in course.phases:
            node_id = f"{ROOT_CALENDAR}.phase-{phase.index}"
            tax.nodes[node_id] = TaxonomyNode(node_id, phase.label, ROOT_CALENDAR)
        for gid in sorted(course.groups):
            node_id = f"{ROOT_PROGRESS}.{gid.lower()}"
            tax.nodes[node_id] = TaxonomyNode(node_id, course.groups[gid].name, ROOT_PROGRESS)
        return tax

    # -- structure queries --

    def roots(self) -> list[TaxonomyNode]:
        return [n for n in self.nodes.values() if n.parent_id is None]

    def children(self, node_id: str) -> list[TaxonomyNode]:
        return [n for n in self.nodes.values() if n.parent_id == node_id]

    def subtree_ids(self, node_id: str) -> set[str]:
        if node_id not in self.nodes:
            raise NotFoundError(f"unknown taxonomy node {node_id!r}")
        out = {node_id}
        frontier = [node_id]
        while frontier:
            current = frontier.pop()
            for child in self.children(current):
                if child.id not in out:
                    out.add(child.id)
                    frontier.append(child.id)
        return out

    def require(self, node_id: str) -> TaxonomyNode:
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFoundError(f"unknown taxonomy node {node_id!r}")
        return node

    def _sibling_labels(self, parent_id: str | None, excluding: str | None = None) -> set[str]:
        return {
            n.label.casefold()
            for n in self.nodes.values()
            if n.parent_id == parent_id and n.id != excluding
        }

    # -- mutations (already validated against the course policy upstream) --

    def propose(self, node_id: str, parent_id: str, label: str, proposed_by: str) -> TaxonomyNode:
        parent = self.require(parent_id)
        label = label.strip()
        if not label:
            raise ValidationError("subject label must not be empty", field="label")
        if label.casefold() in self._sibling_labels(parent.id):
            raise ValidationError(f"subject {label!r} already exists under {parent.label!r}", field="label")
        node = TaxonomyNode(node_id, label, parent.id, status="provisional", proposed_by=proposed_by)
        self.nodes[node_id] = node
        return node

    def establish(self, node_id: str) -> TaxonomyNode:
        node = self.require(node_id)
        if node.parent_id is None:
            raise ValidationError("roots are fixed", field="node_id")
        node.status = "established"
        return node

    def rename(self, node_id: str, label: str) -> TaxonomyNode:
        node = self.require(node_id)
        if node.parent_id is None:
            raise ValidationError("roots are fixed and cannot be renamed", field="node_id")
        label = label.strip()
        if not label:
            raise ValidationError("subject label must not be empty", field="label")
        if label.casefold() in self._sibling_labels(node.parent_id, excluding=node.id):
            raise ValidationError(f"a sibling is already labelled {label!r}", field="label")
        node.label = label
        return node

    def merge(self, node_id: str, into_id: str) -> TaxonomyNode:
        """Fold a node into a sibling: children move over, the node vanishes.

        The forum retags its discussions atomically (see PublicationState).
        """
        node = self.require(node_id)
        target = self.require(into_id)
        if node.parent_id is None or target.parent_id is None:
            raise ValidationError("roots cannot take part in a merge", field="node_id")
        if node.id == target.id:
            raise ValidationError("cannot merge a node into itself", field="into_id")
        if node.parent_id != target.parent_id:
            raise ValidationError("merges are only defined between siblings", field="into_id")
        target_child_labels = self._sibling_labels(target.id)
        for child in self.children(node.id):
            if child.label.casefold() in target_child_labels:
                raise ValidationError(
                    f"merge would duplicate child label {child.label!r} under {target.label!r}",
                    field="into_id",
                )
        for child in self.children(node.id):
            child.parent_id = target.id
        del self.nodes[node.id]
        return target

    # -- outline export / import --

    def to_outline(self) -> str:
        """One node per line, two-space indent per depth, status suffix."""
        lines: list[str] = []

        def emit(node: TaxonomyNode, depth: int) -> None:
            lines.append(f"{'  ' * depth}{node.label} [{node.status}]")
            for child in sorted(self.children(node.id), key=lambda n: n.label.casefold()):
                emit(child, depth + 1)

        for root_id in (ROOT_ROLES, ROOT_CALENDAR, ROOT_PROGRESS):
            emit(self.nodes[root_id], 0)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_outline(cls, text: str) -> "Taxonomy":
        tax = cls.__new__(cls)
        tax.nodes = {}
        stack: list[str] = []  # node id per depth
        line_re = re.compile(r"^(?P<indent>(?:  )*)(?P<label>.*?) \[(?P<status>established|provisional)\]$")
        counter = 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            match = line_re.match(line)
            if not match:
                raise ValidationError(f"outline line {lineno} is malformed", field="outline")
            depth = len(match.group("indent")) // 2
            if depth > len(stack):
                raise ValidationError(f"outline line {lineno} skips a depth level", field="outline")
            label = match.group("label")
            counter += 1
            node_id = f"i{counter}" if depth else _slug(label)
            parent_id = stack[depth - 1] if depth else None
            tax.nodes[node_id] = TaxonomyNode(node_id, label, parent_id, status=match.group("status"))
            stack = stack[:depth] + [node_id]
        roots = tax.roots()
        if len(roots) != 3 or {r.label for r in roots} != set(ROOT_LABELS.values()):
            raise ValidationError("outline must contain exactly the three fixed roots", field="outline")
        return tax


def _slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", label.casefold()).strip("-")


@dataclass
class BlogPost:
    seq: int
    blog_owner: str  # student id or group id
    owner_kind: str  # "student" | "group"
    author_id: str
    body: str
    state: str  # draft -> published for student blogs; submitted -> published/rejected for group blogs
    at: datetime
    moderated_at: datetime | None = None
    moderated_by: str | None = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "blog_owner": self.blog_owner,
            "owner_kind": self.owner_kind,
            "author_id": self.author_id,
            "body": self.body,
            "state": self.state,
            "at": dt_to_iso(self.at),
            "moderated_at": dt_to_iso(self.moderated_at) if self.moderated_at else None,
            "moderated_by": self.moderated_by,
        }


@dataclass
class ForumMessage:
    author_id: str
    text: str
    at: datetime
    seq: int


@dataclass
class ForumDiscussion:
    id: str
    starter_id: str
    title: str
    created_at: datetime
    seq: int
    tags: set[str] = field(default_factory=set)
    messages: list[ForumMessage] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "starter_id": self.starter_id,
            "title": self.title,
            "created_at": dt_to_iso(self.created_at),
            "tags": sorted(self.tags),
            "messages": [
                {"author_id": m.author_id, "text": m.text, "at": dt_to_iso(m.at)} for m in self.messages
            ],
        }


class PublicationState:
    """Projection of blogs, forum and taxonomy; feed entries in seq order."""

    def __init__(self, course: Course):
        self.course = course
        self.taxonomy = Taxonomy.seeded(course)
        self.posts: dict[int, BlogPost] = {}
        self.discussions: dict[str, ForumDiscussion] = {}

    def applies(self, entry: Entry) -> bool:
        if entry.kind in (EntryKind.BLOG_POST, EntryKind.GROUP_POST_SUBMISSION, EntryKind.FORUM_POST, EntryKind.TAXONOMY_PROPOSAL):
            return True
        return entry.kind is EntryKind.LEADER_CONFIRMATION and entry.payload.get("scope") == "blog"

    def apply(self, entry: Entry) -> None:
        if not self.applies(entry):
            return
        payload = entry.payload
        if entry.kind is EntryKind.BLOG_POST:
            self.posts[entry.seq] = BlogPost(
                seq=entry.seq,
                blog_owner=entry.actor_id,
                owner_kind="student",
                author_id=entry.actor_id,
                body=payload["body"],
                state="published",
                at=entry.at,
            )
        elif entry.kind is EntryKind.GROUP_POST_SUBMISSION:
            self.posts[entry.seq] = BlogPost(
                seq=entry.seq,
                blog_owner=entry.group_id,
                owner_kind="group",
                author_id=entry.actor_id,
                body=payload["body"],
                state="submitted",
                at=entry.at,
            )
        elif entry.kind is EntryKind.LEADER_CONFIRMATION:
            post = self.posts.get(payload["post_seq"])
            if post is None or post.owner_kind != "group":
                raise ValidationError(f"moderation targets unknown group post {payload['post_seq']}", field="post_seq")
            post.state = payload["decision"]
            post.moderated_at = entry.at
            post.moderated_by = entry.actor_id
        elif entry.kind is EntryKind.FORUM_POST:
            if payload["op"] == "start":
                discussion_id = f"d{entry.seq}"
                discussion = ForumDiscussion(
                    id=discussion_id,
                    starter_id=entry.actor_id,
                    title=payload["title"],
                    created_at=entry.at,
                    seq=entry.seq,
                    tags=set(payload["tags"]),
                )
                discussion.messages.append(ForumMessage(entry.actor_id, payload["text"], entry.at, entry.seq))
                self.discussions[discussion_id] = discussion
            else:
                discussion = self.discussions.get(payload["discussion_id"])
                if discussion is None:
                    raise NotFoundError(f"unknown discussion {payload['discussion_id']!r}")
                discussion.messages.append(ForumMessage(entry.actor_id, payload["text"], entry.at, entry.seq))
        elif entry.kind is EntryKind.TAXONOMY_PROPOSAL:
            op = payload["op"]
            if op == "propose":
                self.taxonomy.propose(f"n{entry.seq}", payload["parent_id"], payload["label"], entry.actor_id)
            elif op == "establish":
                self.taxonomy.establish(payload["node_id"])
            elif op == "rename":
                self.taxonomy.rename(payload["node_id"], payload["label"])
            elif op == "merge":
                # retag before the node disappears so every tag keeps resolving
                node_id, into_id = payload["node_id"], payload["into_id"]
                self.taxonomy.merge(node_id, into_id)
                for discussion in self.discussions.values():
                    if node_id in discussion.tags:
                        discussion.tags.discard(node_id)
                        discussion.tags.add(into_id)

    # -- feeds and search --

    def student_feed(self, owner_id: str) -> list[BlogPost]:
        return [p for p in self.posts.values() if p.owner_kind == "student" and p.blog_owner == owner_id]

    def group_feed(self, group_id: str, published_only: bool = True) -> list[BlogPost]:
        posts = [p for p in self.posts.values() if p.owner_kind == "group" and p.blog_owner == group_id]
        if published_only:
            posts = [p for p in posts if p.state == "published"]
        return posts

    def pending_group_posts(self, group_id: str) -> list[BlogPost]:
        return [
            p
            for p in self.posts.values()
            if p.owner_kind == "group" and p.blog_owner == group_id and p.state == "submitted"
        ]

    def forum_as_text(self) -> str:
        """Threaded plain-text export: discussion headers with indented messages."""
        blocks: list[str] = []
        for discussion in sorted(self.discussions.values(), key=lambda d: d.seq):
            tags = ", ".join(sorted(discussion.tags))
            blocks.append(f"=== {discussion.title} ({discussion.id}) [{tags}]")
            for message in discussion.messages:
                stamp = dt_to_iso(message.at)
                blocks.append(f"  {message.author_id} @ {stamp}")
                for line in message.text.splitlines() or [""]:
                    blocks.append(f"    {line}")
        return "\n".join(blocks) + "\n" if blocks else "\n"

    def search(self, tags: set[str] | None = None, text: str | None = None) -> list[ForumDiscussion]:
        """Discussions matching ALL tags (self or descendant) and the text, newest first."""
        subtree_cache: dict[str, set[str]] = {}
        if tags:
            for tag in tags:
                subtree_cache[tag] = self.taxonomy.subtree_ids(tag)
        needle = text.casefold() if text else None
        out = []
        for discussion in self.discussions.values():
            if tags and any(not (discussion.tags & subtree_cache[tag]) for tag in tags):
                continue
            if needle is not None:
                haystack = discussion.title.casefold()
                if needle not in haystack and all(needle not in m.text.casefold() for m in discussion.messages):
                    continue
            out.append(discussion)
        return sorted(out, key=lambda d: d.seq, reverse=True)


# --- validation ahead of append --------------------------------------------

def validate_group_post(group: ProjectGroup, author_id: str) -> None:
    if author_id not in group.member_ids:
        raise ValidationError(f"{author_id} is not a member of group {group.id}", field="author_id")


def validate_moderation(state: PublicationState, group: ProjectGroup, leader_id: str, post_seq: int) -> None:
    post = state.posts.get(post_seq)
    if post is None or post.owner_kind != "group" or post.blog_owner != group.id:
        raise NotFoundError(f"no group post {post_seq} on the blog of {group.id}")
    if leader_id != group.leader_id:
        raise ValidationError(f"{leader_id} does not lead group {group.id}", field="leader_id")
    if post.state != "submitted":
        raise StateError(f"post {post_seq} is {post.state}; only submitted posts can be moderated")


def validate_discussion_start(state: PublicationState, tags: list[str]) -> None:
    for tag in tags:
        state.taxonomy.require(tag)


def validate_reply(state: PublicationState, discussion_id: str) -> None:
    if discussion_id not in state.discussions:
        raise NotFoundError(f"unknown discussion {discussion_id!r}")


def validate_taxonomy_change(state: PublicationState, payload: dict) -> None:
    """Dry-run a taxonomy mutation so invalid entries never reach the log."""
    probe = Taxonomy.__new__(Taxonomy)
    probe.nodes = {
        nid: TaxonomyNode(n.id, n.label, n.parent_id, n.status, n.proposed_by)
        for nid, n in state.taxonomy.nodes.items()
    }
    op = payload["op"]
    if op == "propose":
        probe.propose("probe", payload["parent_id"], payload["label"], "probe")
    elif op == "establish":
        probe.establish(payload["node_id"])
    elif op == "rename":
        probe.rename(payload["node_id"], payload["label"])
    elif op == "merge":
        probe.merge(payload["node_id"], payload["into_id"])
