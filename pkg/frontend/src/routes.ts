/** Per-role route tables: the client-side mirror of the server's permission
 * matrix. A view model never requests a resource its role is denied; the
 * server stays authoritative, this table just keeps the client honest. The
 * structural tests walk these tables (and the rendered pages) to prove, for
 * example, that a leader session holds no route or fetch that targets a
 * group member's journal. */

export type UiRole = "student" | "leader" | "tutor" | "manager" | "teacher" | "director";

export interface RouteCtx {
  actorId: string;
  /** the caller's own group (students/leaders) */
  groupId: string | null;
  /** members of that group */
  members: string[];
  /** groups a tutor monitors */
  tutoredGroups: string[];
}

export interface RouteSpec {
  id: string;
  label: string;
  /** every API path this page may fetch, given the session context */
  fetches(ctx: RouteCtx): string[];
}

export function uiRole(myRoles: string[]): UiRole {
  if (myRoles.includes("project_leader")) return "leader";
  if (myRoles.includes("technical_tutor") || myRoles.includes("management_tutor")) return "tutor";
  if (myRoles.includes("technical_manager") || myRoles.includes("management_manager")) return "manager";
  if (myRoles.includes("teacher")) return "teacher";
  if (myRoles.includes("director")) return "director";
  return "student";
}

const STUDENT_ROUTES: RouteSpec[] = [
  {
    id: "dashboard",
    label: "Group dashboard",
    fetches: (ctx) => [
      `/groups/${ctx.groupId}/dashboard`,
      `/groups/${ctx.groupId}/dashboard/gantt`,
    ],
  },
  {
    id: "journal",
    label: "My journal",
    fetches: (ctx) => [`/students/${ctx.actorId}/journal`],
  },
  {
    id: "blog",
    label: "My blog",
    fetches: (ctx) => [`/blogs/students/${ctx.actorId}`, `/blogs/groups/${ctx.groupId}`],
  },
  {
    id: "schedule",
    label: "Schedule",
    fetches: (ctx) => [`/schedule?group=${ctx.groupId}`],
  },
  {
    id: "contract",
    label: "Learning contract",
    fetches: (ctx) => [`/contracts/${ctx.actorId}`],
  },
];

// The leader is a student with steering duties. Note: no member-journal
// fetch exists anywhere in this table; the only journal the leader's client
// ever requests is the leader's own.
const LEADER_ROUTES: RouteSpec[] = [
  {
    id: "pending",
    label: "Pending confirmations",
    fetches: (ctx) => [`/groups/${ctx.groupId}/dashboard/pending`],
  },
  ...STUDENT_ROUTES,
  {
    id: "moderation",
    label: "Blog moderation",
    fetches: (ctx) => [`/blogs/groups/${ctx.groupId}/pending`],
  },
];

const TUTOR_ROUTES: RouteSpec[] = [
  {
    id: "monitor",
    label: "Group monitoring",
    fetches: (ctx) =>
      ctx.tutoredGroups.flatMap((gid) => [
        `/groups/${gid}/dashboard`,
        `/groups/${gid}/dashboard/gantt`,
        `/groups/${gid}/indicators`,
        `/groups/${gid}/monitor`,
      ]),
  },
  {
    id: "students",
    label: "Student activity",
    fetches: (ctx) => ctx.members.flatMap((sid) => [`/students/${sid}/activity`, `/students/${sid}/journal`]),
  },
  {
    id: "forum",
    label: "Forum",
    fetches: () => ["/forum/discussions", "/taxonomy"],
  },
  {
    id: "schedule",
    label: "Schedule",
    fetches: () => ["/schedule"],
  },
  {
    id: "contract",
    label: "My contract",
    fetches: (ctx) => [`/contracts/${ctx.actorId}`],
  },
];

const OVERSIGHT_ROUTES: RouteSpec[] = [
  {
    id: "monitor",
    label: "Course monitoring",
    fetches: (ctx) => ctx.tutoredGroups.flatMap((gid) => [`/groups/${gid}/dashboard`, `/groups/${gid}/indicators`]),
  },
  {
    id: "forum",
    label: "Forum",
    fetches: () => ["/forum/discussions", "/taxonomy"],
  },
  {
    id: "schedule",
    label: "Schedule",
    fetches: () => ["/schedule"],
  },
];

const TEACHER_ROUTES: RouteSpec[] = [
  {
    id: "groups",
    label: "Group dashboards",
    fetches: (ctx) => ctx.tutoredGroups.map((gid) => `/groups/${gid}/dashboard`),
  },
  {
    id: "forum",
    label: "Forum",
    fetches: () => ["/forum/discussions", "/taxonomy"],
  },
  {
    id: "schedule",
    label: "Schedule",
    fetches: () => ["/schedule"],
  },
];

export function routesForRole(role: UiRole): RouteSpec[] {
  switch (role) {
    case "leader":
      return LEADER_ROUTES;
    case "student":
      return STUDENT_ROUTES;
    case "tutor":
      return TUTOR_ROUTES;
    case "manager":
    case "director":
      return OVERSIGHT_ROUTES;
    case "teacher":
      return TEACHER_ROUTES;
  }
}

/** Every fetch a session of this role can ever issue through its routes. */
export function reachableFetches(role: UiRole, ctx: RouteCtx): string[] {
  return routesForRole(role).flatMap((route) => route.fetches(ctx));
}
