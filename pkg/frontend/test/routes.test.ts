import { describe, expect, it } from "vitest";

import { reachableFetches, routesForRole, uiRole, type RouteCtx } from "../src/routes.js";

const LEADER_CTX: RouteCtx = {
  actorId: "s001",
  groupId: "G01",
  members: ["s001", "s002", "s003", "s004", "s005", "s006", "s007", "s008"],
  tutoredGroups: [],
};

const STUDENT_CTX: RouteCtx = { ...LEADER_CTX, actorId: "s002" };

const TUTOR_CTX: RouteCtx = {
  actorId: "t-tech-G01",
  groupId: null,
  members: ["s001", "s002", "s003", "s004", "s005", "s006", "s007", "s008"],
  tutoredGroups: ["G01"],
};

describe("role resolution", () => {
  it("maps role bindings onto one UI role", () => {
    expect(uiRole(["student", "project_leader"])).toBe("leader");
    expect(uiRole(["student"])).toBe("student");
    expect(uiRole(["technical_tutor"])).toBe("tutor");
    expect(uiRole(["management_manager"])).toBe("manager");
    expect(uiRole(["teacher"])).toBe("teacher");
    expect(uiRole(["director"])).toBe("director");
  });
});

describe("leader view model", () => {
  it("holds no route or fetch targeting a member journal", () => {
    const fetches = reachableFetches("leader", LEADER_CTX);
    for (const member of LEADER_CTX.members) {
      if (member === LEADER_CTX.actorId) continue;
      for (const url of fetches) {
        expect(url).not.toContain(`/students/${member}/journal`);
        expect(url).not.toContain(`/students/${member}/activity`);
      }
    }
  });

  it("only ever requests the leader's own journal", () => {
    const journalFetches = reachableFetches("leader", LEADER_CTX).filter((u) => u.includes("/journal"));
    expect(journalFetches).toEqual([`/students/${LEADER_CTX.actorId}/journal`]);
  });

  it("exposes the pending confirmation queue", () => {
    const ids = routesForRole("leader").map((r) => r.id);
    expect(ids).toContain("pending");
    expect(ids).toContain("moderation");
    expect(reachableFetches("leader", LEADER_CTX)).toContain("/groups/G01/dashboard/pending");
  });
});

describe("student view model", () => {
  it("touches only own and group-scoped resources", () => {
    for (const url of reachableFetches("student", STUDENT_CTX)) {
      const ok =
        url.startsWith("/groups/G01/") ||
        url.startsWith(`/students/${STUDENT_CTX.actorId}/`) ||
        url.startsWith(`/blogs/students/${STUDENT_CTX.actorId}`) ||
        url.startsWith("/blogs/groups/G01") ||
        url.startsWith("/schedule") ||
        url.startsWith(`/contracts/${STUDENT_CTX.actorId}`);
      expect(ok, url).toBe(true);
    }
  });

  it("has no forum or taxonomy route", () => {
    const ids = routesForRole("student").map((r) => r.id);
    expect(ids).not.toContain("forum");
    const fetches = reachableFetches("student", STUDENT_CTX);
    expect(fetches.some((u) => u.startsWith("/forum") || u.startsWith("/taxonomy"))).toBe(false);
  });

  it("never requests tutor-only indicator or monitor data", () => {
    const fetches = reachableFetches("student", STUDENT_CTX);
    expect(fetches.some((u) => u.includes("/indicators") || u.includes("/monitor"))).toBe(false);
  });
});

describe("tutor view model", () => {
  it("monitors assigned groups, students, and the forum", () => {
    const fetches = reachableFetches("tutor", TUTOR_CTX);
    expect(fetches).toContain("/groups/G01/indicators");
    expect(fetches).toContain("/students/s002/activity");
    expect(fetches).toContain("/students/s002/journal"); // tutors may read journals
    expect(fetches).toContain("/forum/discussions");
  });

  it("never writes group dashboard data (no entry route)", () => {
    const ids = routesForRole("tutor").map((r) => r.id);
    expect(ids).not.toContain("pending");
    expect(ids).not.toContain("moderation");
  });
});

describe("teacher view model", () => {
  it("is read-only over course surfaces", () => {
    const fetches = reachableFetches("teacher", { ...TUTOR_CTX, tutoredGroups: ["G01", "G02"] });
    expect(fetches.every((u) => u.startsWith("/groups/") || u.startsWith("/forum") || u.startsWith("/taxonomy") || u.startsWith("/schedule"))).toBe(true);
    expect(fetches.some((u) => u.includes("/journal"))).toBe(false);
  });
});
