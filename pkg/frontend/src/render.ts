/** Pure HTML renderers: every page is a string built from API data, so the
 * structural tests can assert on exactly what a session's client shows
 * (routes in the nav, forms, and the absence of forbidden targets). */

import type {
  BlogPost,
  ContractVersion,
  DashboardView,
  Discussion,
  EntryRecord,
  GanttRow,
  Indicators,
  ScheduleItem,
  TaxonomyNode,
  Timeline,
} from "./api.js";
import { ganttSvg, trendSvg } from "./charts.js";
import type { RouteCtx, RouteSpec, UiRole } from "./routes.js";
import { routesForRole } from "./routes.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderNav(role: UiRole, active: string): string {
  const items = routesForRole(role)
    .map(
      (route: RouteSpec) =>
        `<a href="#/${route.id}" class="${route.id === active ? "active" : ""}" data-route="${route.id}">${esc(route.label)}</a>`,
    )
    .join("");
  return `<nav class="topnav" data-role="${role}">${items}<a href="#/logout" data-route="logout">Log out</a></nav>`;
}

export function renderPage(role: UiRole, active: string, actorId: string, content: string): string {
  return `<div class="page">
<header><span class="brand">meshat</span><span class="who">${esc(actorId)} · ${role}</span></header>
${renderNav(role, active)}
<main>${content}</main>
</div>`;
}

/** Denied fetches become a visible notice; the client never retries. */
export function renderPermissionNotice(message: string, ruleId?: string): string {
  const rule = ruleId ? ` <code class="rule">${esc(ruleId)}</code>` : "";
  return `<div class="notice denied" role="alert">Not permitted: ${esc(message)}${rule}</div>`;
}

export function renderDashboard(
  view: DashboardView,
  gantt: GanttRow[],
  opts: { canEnterData: boolean; canConfirm: boolean },
): string {
  const working = Object.entries(view.working_time_by_member)
    .map(([member, hours]) => `<tr><td>${esc(member)}</td><td class="num">${hours.toFixed(1)}h</td></tr>`)
    .join("");
  const mood = Object.entries(view.frame_of_mind)
    .map(([axis, value]) => {
      const shown = value === null ? "–" : value.toFixed(1);
      return `<span class="mood-axis" data-axis="${esc(axis)}">${esc(axis)}: <strong>${shown}</strong></span>`;
    })
    .join(" ");
  const deliverables = view.deliverables
    .map((d) => {
      const badge =
        d.delay_days > 0
          ? `<span class="badge late" data-deliverable="${esc(d.deliverable_id)}">+${d.delay_days}d late</span>`
          : `<span class="badge ontime">on time</span>`;
      const submitted = d.submitted_on ? `submitted ${d.submitted_on}` : "not submitted";
      return `<li>${esc(d.deliverable_id)} · due ${d.due_date} · ${submitted} ${badge}</li>`;
    })
    .join("");
  const entryForm = opts.canEnterData
    ? `<section class="entry-forms">
<h3>Data entry</h3>
<form data-form="time-log">
  <label>Hours <input name="hours" type="number" min="0" step="0.5" required></label>
  <label>Date <input name="occurred_on" type="date" required></label>
  <label>Task <input name="task_id" placeholder="optional"></label>
  <button type="submit">Log time</button>
</form>
<form data-form="mood">
  <label>Motivation <input name="motivation" type="number" min="1" max="5" required></label>
  <label>Satisfaction <input name="satisfaction" type="number" min="1" max="5" required></label>
  <label>Client relationship <input name="client_relationship" type="number" min="1" max="5" required></label>
  <button type="submit">Share mood</button>
</form>
</section>`
    : "";
  return `<section class="dashboard" data-group="${esc(view.group_id)}">
<h2>Group ${esc(view.group_id)} dashboard</h2>
<p class="progress">Overall progress <strong>${view.gantt_progress_pct.toFixed(1)}%</strong>
 · ${view.pending_confirmations} pending confirmation(s)</p>
<h3>Task plan</h3>
${ganttSvg(gantt)}
<h3>Working time</h3>
<table class="working-time"><thead><tr><th>member</th><th>hours</th></tr></thead><tbody>${working}</tbody></table>
<h3>Frame of mind</h3>
<p class="mood">${mood}</p>
<h3>Deliverables</h3>
<ul class="deliverables">${deliverables}</ul>
${entryForm}
</section>`;
}

export function renderPendingQueue(entries: EntryRecord[]): string {
  if (!entries.length) {
    return `<section class="pending"><h2>Pending confirmations</h2><p>Queue is empty.</p></section>`;
  }
  const rows = entries
    .map(
      (e) => `<tr data-seq="${e.seq}">
<td><input type="checkbox" name="confirm" value="${e.seq}"></td>
<td>${e.seq}</td><td>${esc(e.actor_id)}</td><td>${esc(e.kind)}</td>
<td><code>${esc(JSON.stringify(e.payload))}</code></td></tr>`,
    )
    .join("");
  return `<section class="pending"><h2>Pending confirmations</h2>
<form data-form="confirm">
<table><thead><tr><th></th><th>seq</th><th>member</th><th>kind</th><th>payload</th></tr></thead><tbody>${rows}</tbody></table>
<button type="submit">Confirm selected</button>
</form></section>`;
}

export function renderJournal(timeline: Timeline, competencies: { id: string; label: string }[]): string {
  const scalarSeries = timeline.series;
  const trend = trendSvg(scalarSeries, 4);
  const competencyOptions = competencies
    .map((c) => `<option value="${esc(c.id)}">${esc(c.label)}</option>`)
    .join("");
  return `<section class="journal" data-owner="${esc(timeline.actor_id)}">
<h2>Reflexive journal</h2>
${trend}
<form data-form="journal-entry">
<h3>New observation</h3>
<label>Effort (0-4) <input name="effort" type="number" min="0" max="4"></label>
<label>Interest (0-4) <input name="interest" type="number" min="0" max="4"></label>
<label>Feeling of knowing (0-4) <input name="feeling_of_knowing" type="number" min="0" max="4"></label>
<label>Plan <textarea name="plan"></textarea></label>
<label>Help seeking <textarea name="help_seeking"></textarea></label>
<button type="submit">Record</button>
</form>
<form data-form="self-assessment">
<h3>Competency self-assessment</h3>
<label>Competency <select name="competency">${competencyOptions}</select></label>
<label>Rating (0-4) <input name="rating" type="number" min="0" max="4" required></label>
<button type="submit">Assess</button>
</form>
</section>`;
}

export function renderBlogs(own: BlogPost[], group: BlogPost[], groupId: string | null): string {
  const renderPost = (p: BlogPost) =>
    `<article class="post ${p.state}" data-seq="${p.seq}"><header>${esc(p.author_id)} · ${p.at.slice(0, 10)} · ${p.state}</header><p>${esc(p.body)}</p></article>`;
  return `<section class="blogs">
<h2>My blog</h2>
<form data-form="student-post"><textarea name="body" required></textarea><button type="submit">Publish</button></form>
${own.map(renderPost).join("")}
<h2>Group blog${groupId ? ` (${esc(groupId)})` : ""}</h2>
<form data-form="group-post"><textarea name="body" required></textarea><button type="submit">Submit to leader</button></form>
${group.map(renderPost).join("")}
</section>`;
}

export function renderModerationQueue(posts: BlogPost[]): string {
  if (!posts.length) {
    return `<section class="moderation"><h2>Blog moderation</h2><p>No submitted posts.</p></section>`;
  }
  const items = posts
    .map(
      (p) => `<article class="post submitted" data-seq="${p.seq}">
<header>${esc(p.author_id)} · ${p.at.slice(0, 10)}</header><p>${esc(p.body)}</p>
<button data-moderate="published" data-seq="${p.seq}">Publish</button>
<button data-moderate="rejected" data-seq="${p.seq}">Reject</button>
</article>`,
    )
    .join("");
  return `<section class="moderation"><h2>Blog moderation</h2>${items}</section>`;
}

const INDICATOR_LABELS: Record<string, string> = {
  TO: "team orientation",
  TL: "team leadership",
  MO: "monitoring",
  FE: "feedback",
  BA: "back-up",
  CO: "coordination",
};

export function renderIndicators(ind: Indicators): string {
  const cells = Object.entries(INDICATOR_LABELS)
    .map(([key, label]) => {
      const value = ind[key as keyof Indicators] as number | null;
      const shown = value === null ? "–" : value.toFixed(2);
      return `<div class="indicator" data-key="${key}"><span class="value">${shown}</span><span class="label">${key} · ${label}</span></div>`;
    })
    .join("");
  return `<section class="indicators" data-group="${esc(ind.group_id)}">
<h3>Teamwork indicators (${ind.window_from.slice(0, 10)} → ${ind.window_to.slice(0, 10)})</h3>
<div class="indicator-grid">${cells}</div>
</section>`;
}

export function renderForum(nodes: TaxonomyNode[], discussions: Discussion[], activeTags: string[]): string {
  const byParent = new Map<string | null, TaxonomyNode[]>();
  for (const node of nodes) {
    const list = byParent.get(node.parent_id) ?? [];
    list.push(node);
    byParent.set(node.parent_id, list);
  }
  const renderTree = (parentId: string | null): string => {
    const children = (byParent.get(parentId) ?? []).sort((a, b) => a.label.localeCompare(b.label));
    if (!children.length) return "";
    const items = children
      .map((n) => {
        const cls = activeTags.includes(n.id) ? "tag active" : "tag";
        const flag = n.status === "provisional" ? " <em>(provisional)</em>" : "";
        return `<li><a href="#/forum?tags=${encodeURIComponent(n.id)}" class="${cls}" data-tag="${esc(n.id)}">${esc(n.label)}</a>${flag}${renderTree(n.id)}</li>`;
      })
      .join("");
    return `<ul class="taxonomy">${items}</ul>`;
  };
  const roots = (byParent.get(null) ?? []).map((r) => r.id);
  const parentOptions = nodes.map((n) => `<option value="${esc(n.id)}">${esc(n.label)}</option>`).join("");
  const threads = discussions
    .map(
      (d) => `<article class="discussion" data-id="${esc(d.id)}">
<header><strong>${esc(d.title)}</strong> · ${esc(d.starter_id)} · tags: ${d.tags.map(esc).join(", ")}</header>
${d.messages.map((m) => `<p class="msg"><span class="author">${esc(m.author_id)}</span> ${esc(m.text)}</p>`).join("")}
<form data-form="reply" data-discussion="${esc(d.id)}"><input name="text" required><button type="submit">Reply</button></form>
</article>`,
    )
    .join("");
  return `<section class="forum" data-roots="${roots.length}">
<h2>Tutors' forum</h2>
<div class="forum-layout">
<aside>
${renderTree(null)}
<form data-form="propose-subject">
<h3>Propose a subject</h3>
<label>Under <select name="parent_id">${parentOptions}</select></label>
<label>Label <input name="label" required></label>
<button type="submit">Propose</button>
</form>
</aside>
<div class="threads">
<form data-form="start-discussion">
<h3>Start a discussion</h3>
<label>Title <input name="title" required></label>
<label>Text <textarea name="text" required></textarea></label>
<label>Tag <select name="tag">${parentOptions}</select></label>
<button type="submit">Start</button>
</form>
${threads || "<p>No discussions match.</p>"}
</div>
</div>
</section>`;
}

export function renderSchedule(items: ScheduleItem[]): string {
  const rows = items
    .map(
      (i) =>
        `<tr data-source="${esc(i.source)}"><td>${i.starts_at.slice(0, 10)}</td><td>${i.ends_at.slice(0, 10)}</td><td>${esc(i.title)}</td><td>${esc(i.scope)}${i.group_id ? ` (${esc(i.group_id)})` : ""}</td></tr>`,
    )
    .join("");
  return `<section class="schedule"><h2>Shared schedule</h2>
<table><thead><tr><th>from</th><th>to</th><th>what</th><th>scope</th></tr></thead><tbody>${rows}</tbody></table>
</section>`;
}

export function renderContract(versions: Record<string, ContractVersion>, canCreate: boolean): string {
  const blocks = Object.values(versions)
    .sort((a, b) => a.version - b.version)
    .map((v) => {
      const answers = v.answers
        .map(([q, a]) => `<dt>${esc(q)}</dt><dd>${esc(a)}</dd>`)
        .join("");
      return `<article class="contract" data-version="${v.version}"><h3>Version ${v.version}</h3><dl>${answers}</dl></article>`;
    })
    .join("");
  const form =
    canCreate && !Object.keys(versions).length
      ? `<form data-form="create-contract">
<h3>Write your learning contract</h3>
${[1, 2, 3, 4, 5, 6].map((i) => `<label>Answer ${i} <textarea name="answer${i}" required></textarea></label>`).join("")}
<button type="submit">Create</button>
</form>`
      : "";
  return `<section class="contracts"><h2>Learning contract</h2>${blocks || "<p>No contract yet.</p>"}${form}</section>`;
}

export function renderActivity(summaries: { student: string; counts: Record<string, number>; hours: number }[]): string {
  const rows = summaries
    .map((s) => {
      const counts = Object.entries(s.counts)
        .map(([kind, n]) => `${esc(kind)}: ${n}`)
        .join(", ");
      return `<tr data-student="${esc(s.student)}"><td>${esc(s.student)}</td><td>${s.hours.toFixed(1)}h</td><td>${counts || "–"}</td></tr>`;
    })
    .join("");
  return `<section class="activity"><h2>Student activity (14 days)</h2>
<table><thead><tr><th>student</th><th>hours</th><th>entries</th></tr></thead><tbody>${rows}</tbody></table>
</section>`;
}

export function renderLogin(error?: string): string {
  return `<div class="login">
<h1>meshat</h1>
${error ? `<div class="notice denied">${esc(error)}</div>` : ""}
<form data-form="login">
<label>Actor id <input name="actor_id" required></label>
<label>Secret <input name="secret" type="password" required></label>
<button type="submit">Sign in</button>
</form>
</div>`;
}
