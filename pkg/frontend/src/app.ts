/** Browser bootstrap: hash routing, session handling, form wiring.
 * The only state that survives a reload is the session token. */

import { Api, ApiError, type CourseSummary } from "./api.js";
import {
  renderActivity,
  renderBlogs,
  renderContract,
  renderDashboard,
  renderForum,
  renderIndicators,
  renderJournal,
  renderLogin,
  renderModerationQueue,
  renderPage,
  renderPendingQueue,
  renderPermissionNotice,
  renderSchedule,
} from "./render.js";
import { routesForRole, uiRole, type RouteCtx, type UiRole } from "./routes.js";

declare global {
  interface Window {
    MESHAT_API?: string;
  }
}

interface AppState {
  api: Api;
  actorId: string;
  role: UiRole;
  course: CourseSummary;
  ctx: RouteCtx;
}

let state: AppState | null = null;

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

function show(html: string): void {
  root().innerHTML = html;
}

async function renderRoute(routeId: string, params: URLSearchParams): Promise<void> {
  if (!state) {
    show(renderLogin());
    return;
  }
  const { api, actorId, role, course, ctx } = state;
  const known = routesForRole(role).some((r) => r.id === routeId);
  const active = known ? routeId : (routesForRole(role)[0]?.id ?? "dashboard");
  try {
    let content: string;
    switch (active) {
      case "dashboard": {
        const view = await api.dashboard(ctx.groupId!);
        const gantt = await api.gantt(ctx.groupId!);
        content = renderDashboard(view, gantt.rows, {
          canEnterData: role === "student" || role === "leader",
          canConfirm: role === "leader",
        });
        break;
      }
      case "pending": {
        const queue = await api.pending(ctx.groupId!);
        content = renderPendingQueue(queue.pending);
        break;
      }
      case "moderation": {
        const queue = await api.groupBlogPending(ctx.groupId!);
        content = renderModerationQueue(queue.posts);
        break;
      }
      case "journal": {
        const timeline = await api.journal(actorId);
        content = renderJournal(timeline, course.competencies);
        break;
      }
      case "blog": {
        const own = await api.studentBlog(actorId);
        const group = ctx.groupId ? await api.groupBlog(ctx.groupId) : { posts: [] };
        content = renderBlogs(own.posts, group.posts, ctx.groupId);
        break;
      }
      case "monitor":
      case "groups": {
        const parts: string[] = [];
        for (const gid of ctx.tutoredGroups) {
          const view = await api.dashboard(gid);
          const gantt = role === "teacher" ? { rows: [] } : await api.gantt(gid);
          parts.push(renderDashboard(view, gantt.rows, { canEnterData: false, canConfirm: false }));
          if (role !== "teacher") {
            parts.push(renderIndicators(await api.indicators(gid)));
          }
        }
        content = parts.join("") || "<p>No groups assigned.</p>";
        break;
      }
      case "students": {
        const summaries = [];
        for (const sid of ctx.members) {
          const summary = (await api.activity(sid)) as {
            counts_by_kind: Record<string, number>;
            hours_total: number;
          };
          summaries.push({ student: sid, counts: summary.counts_by_kind, hours: summary.hours_total });
        }
        content = renderActivity(summaries);
        break;
      }
      case "forum": {
        const tags = (params.get("tags") ?? "").split(",").filter(Boolean);
        const taxonomy = await api.taxonomy();
        const hits = await api.forum(tags.length ? tags : undefined, params.get("q") ?? undefined);
        content = renderForum(taxonomy.nodes, hits.discussions, tags);
        break;
      }
      case "schedule": {
        const items = await api.schedule(ctx.groupId ?? undefined);
        content = renderSchedule(items.items);
        break;
      }
      case "contract": {
        let versions: Record<string, never> | Record<string, any> = {};
        try {
          versions = (await api.contract(actorId)).versions;
        } catch (err) {
          if (!(err instanceof ApiError && err.status === 404)) throw err;
        }
        content = renderContract(versions, true);
        break;
      }
      default:
        content = "<p>Nothing here.</p>";
    }
    show(renderPage(role, active, actorId, content));
  } catch (err) {
    if (err instanceof ApiError && (err.status === 403 || err.status === 401)) {
      // visible permission notice; never retried
      show(renderPage(role, active, actorId, renderPermissionNotice(err.message, err.ruleId)));
      return;
    }
    throw err;
  }
}

function currentRoute(): [string, URLSearchParams] {
  const hash = window.location.hash.replace(/^#\//, "");
  const [path, query] = hash.split("?", 2);
  return [path || "", new URLSearchParams(query ?? "")];
}

async function rerender(): Promise<void> {
  const [path, params] = currentRoute();
  if (path === "logout") {
    sessionStorage.removeItem("meshat.token");
    state = null;
    window.location.hash = "";
  }
  await renderRoute(path, params);
}

async function establishSession(api: Api, actorId: string): Promise<void> {
  const { courses } = await api.courses();
  const course = courses[0];
  if (!course) throw new ApiError(404, "no course enrolls this actor");
  const role = uiRole(course.my_roles);
  const groupId = course.my_groups[0] ?? null;
  let members: string[] = [];
  const tutoredGroups = role === "tutor" ? course.my_groups : course.groups;
  if (role === "tutor" && groupId) {
    const view = await api.dashboard(groupId);
    members = Object.keys(view.working_time_by_member);
  }
  state = {
    api,
    actorId,
    role,
    course,
    ctx: { actorId, groupId, members, tutoredGroups },
  };
}

async function handleLogin(form: HTMLFormElement): Promise<void> {
  const data = new FormData(form);
  const api = new Api(window.MESHAT_API ?? "");
  try {
    const session = await api.login(String(data.get("actor_id")), String(data.get("secret")));
    api.setToken(session.token);
    sessionStorage.setItem("meshat.token", session.token);
    sessionStorage.setItem("meshat.actor", session.actor_id);
    await establishSession(api, session.actor_id);
    window.location.hash = "#/";
    await rerender();
  } catch (err) {
    if (err instanceof ApiError) {
      show(renderLogin(err.message));
      return;
    }
    throw err;
  }
}

async function handleForm(form: HTMLFormElement): Promise<void> {
  if (!state) return;
  const kind = form.dataset.form;
  const data = new FormData(form);
  const { api, actorId, ctx } = state;
  const gid = ctx.groupId!;
  switch (kind) {
    case "login":
      await handleLogin(form);
      return;
    case "time-log": {
      const payload: Record<string, unknown> = {
        hours: Number(data.get("hours")),
        occurred_on: String(data.get("occurred_on")),
      };
      const task = String(data.get("task_id") ?? "");
      if (task) payload.task_id = task;
      await api.proposeEntry(gid, "time_log", payload);
      break;
    }
    case "mood":
      await api.proposeEntry(gid, "mood_entry", {
        motivation: Number(data.get("motivation")),
        satisfaction: Number(data.get("satisfaction")),
        client_relationship: Number(data.get("client_relationship")),
      });
      break;
    case "confirm": {
      const seqs = Array.from(form.querySelectorAll<HTMLInputElement>("input[name=confirm]:checked")).map((i) =>
        Number(i.value),
      );
      if (seqs.length) await api.confirmEntries(gid, seqs);
      break;
    }
    case "journal-entry": {
      const payload: Record<string, Record<string, unknown>> = {
        cognition: {},
        metacognition: {},
        motivation: {},
        behaviour: {},
      };
      const effort = data.get("effort");
      const interest = data.get("interest");
      const feeling = data.get("feeling_of_knowing");
      if (effort) payload.motivation!.effort = Number(effort);
      if (interest) payload.motivation!.interest = Number(interest);
      if (feeling) payload.metacognition!.feeling_of_knowing = Number(feeling);
      if (data.get("plan")) payload.cognition!.plan = String(data.get("plan"));
      if (data.get("help_seeking")) payload.behaviour!.help_seeking = String(data.get("help_seeking"));
      await api.journalEntry(actorId, { entry_type: "facets", ...payload });
      break;
    }
    case "self-assessment":
      await api.selfAssess(actorId, { [String(data.get("competency"))]: Number(data.get("rating")) });
      break;
    case "student-post":
      await api.postStudentBlog(actorId, String(data.get("body")));
      break;
    case "group-post":
      await api.postGroupBlog(gid, String(data.get("body")));
      break;
    case "reply":
      await api.reply(form.dataset.discussion!, String(data.get("text")));
      break;
    case "start-discussion":
      await api.startDiscussion(String(data.get("title")), String(data.get("text")), [String(data.get("tag"))]);
      break;
    case "propose-subject":
      await api.proposeSubject(String(data.get("parent_id")), String(data.get("label")));
      break;
    case "create-contract":
      await api.createContract(
        actorId,
        [1, 2, 3, 4, 5, 6].map((i) => String(data.get(`answer${i}`))),
      );
      break;
  }
  await rerender();
}

export function boot(): void {
  window.addEventListener("hashchange", () => void rerender());
  document.addEventListener("submit", (event) => {
    const form = event.target as HTMLFormElement;
    if (form.dataset.form) {
      event.preventDefault();
      void handleForm(form).catch((err) => {
        if (err instanceof ApiError) {
          const main = root().querySelector("main");
          const notice = renderPermissionNotice(err.message, err.ruleId);
          if (main) main.insertAdjacentHTML("afterbegin", notice);
          else show(renderLogin(err.message));
        } else {
          throw err;
        }
      });
    }
  });
  document.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset.moderate && state) {
      event.preventDefault();
      void state.api
        .moderatePost(state.ctx.groupId!, Number(target.dataset.seq), target.dataset.moderate)
        .then(() => rerender());
    }
  });
  void (async () => {
    const token = sessionStorage.getItem("meshat.token");
    const actor = sessionStorage.getItem("meshat.actor");
    if (token && actor) {
      const api = new Api(window.MESHAT_API ?? "", token);
      try {
        await establishSession(api, actor);
      } catch {
        sessionStorage.removeItem("meshat.token");
      }
    }
    await rerender();
  })();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
