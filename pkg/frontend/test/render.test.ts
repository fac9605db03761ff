import { describe, expect, it } from "vitest";

import type { DashboardView, Discussion, GanttRow, TaxonomyNode, Timeline } from "../src/api.js";
import {
  renderDashboard,
  renderForum,
  renderJournal,
  renderNav,
  renderPage,
  renderPendingQueue,
  renderPermissionNotice,
} from "../src/render.js";

const VIEW: DashboardView = {
  group_id: "G01",
  as_of: "2010-01-15T12:00:00+00:00",
  gantt_progress_pct: 62.5,
  working_time_by_member: { s001: 10, s002: 4.5 },
  frame_of_mind: { motivation: 4.0, satisfaction: 3.5, client_relationship: null },
  deliverables: [
    { deliverable_id: "tender-answer", due_date: "2009-11-30", submitted_on: "2009-11-28", delay_days: 0 },
    { deliverable_id: "master-plan", due_date: "2009-12-31", submitted_on: null, delay_days: 15 },
  ],
  pending_confirmations: 2,
};

const GANTT: GanttRow[] = [
  { task: "T1", start: "2010-01-05", end: "2010-02-01", pct: 80, depends_on: [] },
  { task: "T2", start: "2010-01-20", end: "2010-03-01", pct: 10, depends_on: ["T1"] },
];

describe("dashboard page", () => {
  it("shows gantt bars, working time, mood and delay badges", () => {
    const html = renderDashboard(VIEW, GANTT, { canEnterData: true, canConfirm: false });
    expect(html).toContain('svg class="gantt"');
    expect(html).toContain('data-task="T1"');
    expect(html).toContain("62.5%");
    expect(html).toContain("<td>s002</td><td class=\"num\">4.5h</td>");
    expect(html).toContain('data-axis="motivation"');
    expect(html).toContain("+15d late");
    expect(html).toContain('data-form="time-log"');
    expect(html).toContain('data-form="mood"');
  });

  it("omits entry forms for read-only sessions", () => {
    const html = renderDashboard(VIEW, GANTT, { canEnterData: false, canConfirm: false });
    expect(html).not.toContain("data-form=");
  });

  it("escapes data coming from the API", () => {
    const hostile = { ...VIEW, group_id: 'G01"><script>alert(1)</script>' };
    const html = renderDashboard(hostile, [], { canEnterData: false, canConfirm: false });
    expect(html).not.toContain("<script>alert(1)</script>");
  });
});

describe("leader page structure", () => {
  const members = ["s001", "s002", "s003", "s004", "s005", "s006", "s007", "s008"];

  it("contains no link, route or form targeting member journals", () => {
    const queue = renderPendingQueue([
      {
        seq: 7,
        at: "2010-01-15T10:00:00+00:00",
        actor_id: "s002",
        group_id: "G01",
        kind: "mood_entry",
        payload: { motivation: 4, satisfaction: 3, client_relationship: 5 },
        kolb_tags: [],
        request_id: null,
      },
    ]);
    const page = renderPage("leader", "pending", "s001", queue);
    for (const member of members.slice(1)) {
      expect(page).not.toContain(`/students/${member}/journal`);
      expect(page).not.toContain(`#/journal/${member}`);
    }
    // the nav exposes only the leader's own journal route
    expect(page).toContain('data-route="journal"');
    expect(page).toContain('data-route="pending"');
  });

  it("renders the pending queue with confirm controls", () => {
    const html = renderPendingQueue([
      {
        seq: 7,
        at: "2010-01-15T10:00:00+00:00",
        actor_id: "s002",
        group_id: "G01",
        kind: "mood_entry",
        payload: { motivation: 4 },
        kolb_tags: [],
        request_id: null,
      },
    ]);
    expect(html).toContain('data-form="confirm"');
    expect(html).toContain('value="7"');
    expect(html).toContain("mood_entry");
  });
});

describe("permission notices", () => {
  it("renders the denial visibly with its rule id", () => {
    const html = renderPermissionNotice("s001 may not read student_dashboard", "leader-denied-member-journals");
    expect(html).toContain('role="alert"');
    expect(html).toContain("leader-denied-member-journals");
    expect(html).toContain("Not permitted");
  });
});

describe("forum page", () => {
  const nodes: TaxonomyNode[] = [
    { id: "roles-and-tasks", label: "roles and tasks", parent_id: null, status: "established", proposed_by: null },
    { id: "project-calendar", label: "project calendar", parent_id: null, status: "established", proposed_by: null },
    { id: "group-progress", label: "group progress", parent_id: null, status: "established", proposed_by: null },
    { id: "n9", label: "dashboard coaching", parent_id: "roles-and-tasks", status: "provisional", proposed_by: "t1" },
  ];
  const discussions: Discussion[] = [
    {
      id: "d4",
      starter_id: "t-tech-G01",
      title: "pacing phase two",
      created_at: "2010-01-10T09:00:00+00:00",
      tags: ["project-calendar"],
      messages: [{ author_id: "t-tech-G01", text: "thoughts?", at: "2010-01-10T09:00:00+00:00" }],
    },
  ];

  it("shows the three roots, provisional flags, and the propose form", () => {
    const html = renderForum(nodes, discussions, []);
    expect(html).toContain('data-roots="3"');
    expect(html).toContain("roles and tasks");
    expect(html).toContain("project calendar");
    expect(html).toContain("group progress");
    expect(html).toContain("(provisional)");
    expect(html).toContain('data-form="propose-subject"');
    expect(html).toContain('data-form="start-discussion"');
    expect(html).toContain("pacing phase two");
  });

  it("marks active tag filters", () => {
    const html = renderForum(nodes, discussions, ["project-calendar"]);
    expect(html).toContain('class="tag active"');
  });
});

describe("journal page", () => {
  const timeline: Timeline = {
    actor_id: "s002",
    series: {
      "motivation.effort": [
        { at: "2010-01-10T09:00:00+00:00", seq: 1, value: 2 },
        { at: "2010-01-14T09:00:00+00:00", seq: 5, value: 3 },
      ],
    },
    competency_trajectories: {},
  };

  it("renders the facet trend and both entry forms", () => {
    const html = renderJournal(timeline, [{ id: "soft.empathy", label: "empathy", kind: "soft" }]);
    expect(html).toContain('svg class="trend"');
    expect(html).toContain('data-series="motivation.effort"');
    expect(html).toContain('data-form="journal-entry"');
    expect(html).toContain('data-form="self-assessment"');
    expect(html).toContain("empathy");
  });
});

describe("nav", () => {
  it("student nav has no forum or pending routes", () => {
    const html = renderNav("student", "dashboard");
    expect(html).not.toContain('data-route="forum"');
    expect(html).not.toContain('data-route="pending"');
  });

  it("tutor nav has forum but no confirmation or moderation routes", () => {
    const html = renderNav("tutor", "monitor");
    expect(html).toContain('data-route="forum"');
    expect(html).not.toContain('data-route="pending"');
    expect(html).not.toContain('data-route="moderation"');
  });
});
