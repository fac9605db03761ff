/** Typed client for the meshat HTTP API. Every call goes through request();
 * denials surface as ApiError carrying the violated rule id so pages can
 * show a permission notice instead of retrying. */

export interface LoginResponse {
  token: string;
  actor_id: string;
  issued_at: string;
  expiry: string;
}

export interface CourseSummary {
  id: string;
  name: string;
  start_date: string;
  end_date: string;
  state: string;
  lifecycle: string;
  groups: string[];
  my_groups: string[];
  my_roles: string[];
  competencies: { id: string; label: string; kind: string }[];
}

export interface DashboardView {
  group_id: string;
  as_of: string;
  gantt_progress_pct: number;
  working_time_by_member: Record<string, number>;
  frame_of_mind: Record<string, number | null>;
  deliverables: {
    deliverable_id: string;
    due_date: string;
    submitted_on: string | null;
    delay_days: number;
  }[];
  pending_confirmations: number;
}

export interface EntryRecord {
  seq: number;
  at: string;
  actor_id: string;
  group_id: string | null;
  kind: string;
  payload: Record<string, unknown>;
  kolb_tags: string[];
  request_id: string | null;
}

export interface GanttRow {
  task: string;
  start: string;
  end: string;
  pct: number;
  depends_on: string[];
}

export interface Indicators {
  group_id: string;
  window_from: string;
  window_to: string;
  TO: number | null;
  TL: number | null;
  MO: number | null;
  FE: number | null;
  BA: number | null;
  CO: number | null;
}

export interface TimelinePoint {
  at: string;
  seq: number;
  value: number;
}

export interface Timeline {
  actor_id: string;
  series: Record<string, TimelinePoint[]>;
  competency_trajectories: Record<string, TimelinePoint[]>;
}

export interface BlogPost {
  seq: number;
  blog_owner: string;
  owner_kind: string;
  author_id: string;
  body: string;
  state: string;
  at: string;
}

export interface Discussion {
  id: string;
  starter_id: string;
  title: string;
  created_at: string;
  tags: string[];
  messages: { author_id: string; text: string; at: string }[];
}

export interface TaxonomyNode {
  id: string;
  label: string;
  parent_id: string | null;
  status: string;
  proposed_by: string | null;
}

export interface ScheduleItem {
  id: string;
  title: string;
  starts_at: string;
  ends_at: string;
  scope: string;
  group_id: string | null;
  source: string;
}

export interface ContractVersion {
  holder_id: string;
  version: number;
  answers: [string, string][];
  created_at: string;
  evidence_refs: number[];
  digest: string;
}

export interface MonitorData {
  group_id: string;
  notes: Record<string, unknown>[];
  assessments: Record<string, unknown>[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public ruleId?: string,
    public errorType?: string,
  ) {
    super(message);
  }
}

export class Api {
  constructor(
    private base: string,
    private token: string | null = null,
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const detail = parsed?.error ?? {};
      throw new ApiError(response.status, detail.message ?? response.statusText, detail.rule_id, detail.type);
    }
    return parsed as T;
  }

  login(actorId: string, secret: string): Promise<LoginResponse> {
    return this.request("POST", "/auth/login", { actor_id: actorId, secret });
  }

  courses(): Promise<{ courses: CourseSummary[] }> {
    return this.request("GET", "/courses");
  }

  dashboard(groupId: string): Promise<DashboardView> {
    return this.request("GET", `/groups/${groupId}/dashboard`);
  }

  pending(groupId: string): Promise<{ pending: EntryRecord[] }> {
    return this.request("GET", `/groups/${groupId}/dashboard/pending`);
  }

  gantt(groupId: string): Promise<{ rows: GanttRow[] }> {
    return this.request("GET", `/groups/${groupId}/dashboard/gantt`);
  }

  proposeEntry(
    groupId: string,
    kind: string,
    payload: Record<string, unknown>,
    requestId?: string,
  ): Promise<EntryRecord> {
    return this.request("POST", `/groups/${groupId}/dashboard/entries`, {
      kind,
      payload,
      request_id: requestId ?? null,
    });
  }

  confirmEntries(groupId: string, seqs: number[], requestId?: string): Promise<DashboardView> {
    return this.request("POST", `/groups/${groupId}/dashboard/confirmations`, {
      seqs,
      request_id: requestId ?? null,
    });
  }

  indicators(groupId: string, from?: string, to?: string): Promise<Indicators> {
    const params = new URLSearchParams();
    if (from) params.set("from", from);
    if (to) params.set("to", to);
    const query = params.toString();
    return this.request("GET", `/groups/${groupId}/indicators${query ? "?" + query : ""}`);
  }

  monitor(groupId: string): Promise<MonitorData> {
    return this.request("GET", `/groups/${groupId}/monitor`);
  }

  journal(studentId: string): Promise<Timeline> {
    return this.request("GET", `/students/${studentId}/journal`);
  }

  journalEntry(studentId: string, payload: Record<string, unknown>): Promise<EntryRecord> {
    return this.request("POST", `/students/${studentId}/journal/entries`, { payload });
  }

  selfAssess(studentId: string, ratings: Record<string, number>): Promise<EntryRecord> {
    return this.request("POST", `/students/${studentId}/journal/assessments`, { ratings });
  }

  activity(studentId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/students/${studentId}/activity`);
  }

  studentBlog(studentId: string): Promise<{ posts: BlogPost[] }> {
    return this.request("GET", `/blogs/students/${studentId}`);
  }

  postStudentBlog(studentId: string, body: string): Promise<BlogPost> {
    return this.request("POST", `/blogs/students/${studentId}/posts`, { body });
  }

  groupBlog(groupId: string): Promise<{ posts: BlogPost[] }> {
    return this.request("GET", `/blogs/groups/${groupId}`);
  }

  groupBlogPending(groupId: string): Promise<{ posts: BlogPost[] }> {
    return this.request("GET", `/blogs/groups/${groupId}/pending`);
  }

  postGroupBlog(groupId: string, body: string): Promise<BlogPost> {
    return this.request("POST", `/blogs/groups/${groupId}/posts`, { body });
  }

  moderatePost(groupId: string, seq: number, decision: string): Promise<BlogPost> {
    return this.request("POST", `/blogs/groups/${groupId}/posts/${seq}/moderation`, { decision });
  }

  forum(tags?: string[], q?: string): Promise<{ discussions: Discussion[] }> {
    const params = new URLSearchParams();
    if (tags && tags.length) params.set("tags", tags.join(","));
    if (q) params.set("q", q);
    const query = params.toString();
    return this.request("GET", `/forum/discussions${query ? "?" + query : ""}`);
  }

  startDiscussion(title: string, text: string, tags: string[]): Promise<Discussion> {
    return this.request("POST", "/forum/discussions", { title, text, tags });
  }

  reply(discussionId: string, text: string): Promise<EntryRecord> {
    return this.request("POST", `/forum/discussions/${discussionId}/replies`, { text });
  }

  taxonomy(): Promise<{ nodes: TaxonomyNode[] }> {
    return this.request("GET", "/taxonomy");
  }

  proposeSubject(parentId: string, label: string): Promise<TaxonomyNode> {
    return this.request("POST", "/taxonomy/proposals", { parent_id: parentId, label });
  }

  contract(holderId: string): Promise<{ versions: Record<string, ContractVersion> }> {
    return this.request("GET", `/contracts/${holderId}`);
  }

  createContract(holderId: string, answers: string[]): Promise<ContractVersion> {
    return this.request("POST", `/contracts/${holderId}`, { answers });
  }

  schedule(groupId?: string): Promise<{ items: ScheduleItem[] }> {
    const query = groupId ? `?group=${groupId}` : "";
    return this.request("GET", `/schedule${query}`);
  }
}
