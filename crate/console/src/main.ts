import { ApiClient, type ApiResult } from "./api.js";
import type { Messages } from "./i18n.js";
import { renderEntityView } from "./render.js";
import { clampMaxPaths, initialState, normalizeQid, parseLocale, type ConsoleState } from "./state.js";
import type { SnapshotDoc } from "./types.js";

export class Console {
  state: ConsoleState;
  messages: Messages = {};
  snapshot?: SnapshotDoc;

  constructor(
    readonly api: ApiClient,
    private onRender: (html: string) => void = () => {},
  ) {
    this.state = initialState();
  }

  async start(): Promise<void> {
    const [catalog, snapshot] = await Promise.all([this.api.catalog(this.state.locale), this.api.snapshot()]);
    if (this.accept(catalog)) this.messages = catalog.data.messages;
    if (this.accept(snapshot)) this.snapshot = snapshot.data;
    this.render();
  }

  /** Only the catalog is re-fetched; entity data stays as it was. */
  async setLocale(locale: string): Promise<void> {
    this.state.locale = parseLocale(locale);
    const catalog = await this.api.catalog(this.state.locale);
    if (this.accept(catalog)) this.messages = catalog.data.messages;
    this.render();
  }

  async setMaxPaths(value: unknown): Promise<void> {
    this.state.maxPaths = clampMaxPaths(value);
    if (this.state.entity) {
      const r = await this.api.redundancy(this.state.qid, this.state.maxPaths);
      if (this.accept(r)) this.state.redundancy = r.data;
    }
    this.render();
  }

  async inspect(input: string): Promise<void> {
    const qid = normalizeQid(input);
    this.state.error = undefined;
    if (!qid) {
      this.state.error = { status: 400, code: "MalformedId", message: input };
      this.render();
      return;
    }
    this.state.qid = qid;
    const entity = await this.api.entity(qid, this.state.locale);
    if (!this.accept(entity)) {
      this.state.entity = this.state.redundancy = this.state.similarity = undefined;
      this.render();
      return;
    }
    this.state.entity = entity.data;
    const [red, sim] = await Promise.all([
      this.api.redundancy(qid, this.state.maxPaths),
      this.api.similarity(qid),
    ]);
    this.state.redundancy = this.accept(red) ? red.data : undefined;
    // A missing text is not an error for the page as a whole.
    this.state.similarity = sim.ok ? sim.data : undefined;
    this.render();
  }

  html(): string {
    return renderEntityView(this.state, this.messages, this.snapshot);
  }

  private accept<T>(r: ApiResult<T>): r is Extract<ApiResult<T>, { ok: true }> {
    if (r.ok) return true;
    if ("error" in r) this.state.error = { status: r.status, ...r.error };
    return false;
  }

  private render(): void {
    this.onRender(this.html());
  }
}

function mount(root: HTMLElement): Console {
  const app = new Console(new ApiClient(""), (html) => {
    root.innerHTML = html;
  });
  root.addEventListener("change", (ev) => {
    const el = ev.target as HTMLInputElement | HTMLSelectElement;
    if (el.name === "locale") void app.setLocale(el.value);
    if (el.name === "max_paths") void app.setMaxPaths(el.value);
  });
  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    if (el instanceof HTMLButtonElement && el.name === "inspect") {
      const input = root.querySelector<HTMLInputElement>("input[name=qid]");
      void app.inspect(input?.value ?? "");
    }
  });
  void app.start();
  return app;
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mount(root);
}
