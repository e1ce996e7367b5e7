// DOM application: session wizard, batch labeling cards, steering panel,
// and live metric charts. One in-flight mutation at a time; every user
// action is an async method so tests can drive the same paths clicks do.

import { ApiClient, ApiError, BatchEntry, MetricsRecord, SessionResource } from "./api.js";
import { Allocation, balance, validateParams } from "./balance.js";
import { lineChartSvg } from "./charts.js";

function esc(text: unknown): string {
  return String(text).replace(/[&<>"']/g, (ch) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;" })[ch] as string,
  );
}

function fmtProb(p: number | null): string {
  return p === null ? "n/a" : p.toFixed(3);
}

export class App {
  session: SessionResource | null = null;
  batch: BatchEntry[] = [];
  chosen = new Map<number, number>();
  history: MetricsRecord[] = [];
  busy = false;

  constructor(
    readonly root: HTMLElement,
    readonly client: ApiClient,
  ) {}

  // --- wizard ---------------------------------------------------------

  async start(): Promise<void> {
    let options = "";
    try {
      const { datasets } = await this.client.listDatasets();
      options = datasets
        .map(
          (d) =>
            `<option value="${esc(d.name)}">${esc(d.name)} (n=${d.n}, d=${d.d}, ${d.anomalies} anomalies)</option>`,
        )
        .join("");
    } catch (err) {
      this.root.innerHTML = `<div id="banner" class="error">service unreachable: ${esc(
        (err as Error).message,
      )} — reload to retry</div>`;
      return;
    }
    this.root.innerHTML = `
      <h1>albatch labeler</h1>
      <form id="wizard">
        <div id="wizard-error" class="error" hidden></div>
        <label>dataset <select id="w-dataset">${options}</select></label>
        <label>strategy
          <select id="w-strategy">
            <option value="adaptive" selected>adaptive</option>
            <option value="random">random</option>
            <option value="max_entropy">max_entropy</option>
            <option value="kmedoids">kmedoids</option>
            <option value="representative">representative</option>
            <option value="informative">informative</option>
          </select>
        </label>
        <label>mode
          <select id="w-mode">
            <option value="replay" selected>replay (ground truth known)</option>
            <option value="live">live (human labels only)</option>
          </select>
        </label>
        <label>batch size b <input id="w-b" type="number" value="20" min="1"></label>
        <label>initial labels M <input id="w-m" type="number" value="4" min="2" step="2"></label>
        <label>confidence c <input id="w-c" type="range" value="0" min="0" max="1" step="0.05">
          <span id="w-c-value">0.00</span></label>
        <label>T1 <input id="w-t1" type="number" value="0" min="0"></label>
        <label>T2 <input id="w-t2" type="number" value="5" min="1"></label>
        <label>iteration budget T <input id="w-t" type="number" value="20" min="1"></label>
        <label>seed <input id="w-seed" type="number" value="0"></label>
        <button id="w-create" type="button">create session</button>
      </form>
      <div id="session-area"></div>`;
    const slider = this.el<HTMLInputElement>("#w-c");
    slider.addEventListener("input", () => {
      this.el("#w-c-value").textContent = Number(slider.value).toFixed(2);
    });
    this.el("#w-create").addEventListener("click", () => void this.createSession());
  }

  async createSession(): Promise<void> {
    if (this.busy) return;
    const body = {
      dataset: this.el<HTMLSelectElement>("#w-dataset").value,
      strategy: this.el<HTMLSelectElement>("#w-strategy").value,
      mode: this.el<HTMLSelectElement>("#w-mode").value,
      b: Number(this.el<HTMLInputElement>("#w-b").value),
      M: Number(this.el<HTMLInputElement>("#w-m").value),
      c: Number(this.el<HTMLInputElement>("#w-c").value),
      T1: Number(this.el<HTMLInputElement>("#w-t1").value),
      T2: Number(this.el<HTMLInputElement>("#w-t2").value),
      T: Number(this.el<HTMLInputElement>("#w-t").value),
      seed: Number(this.el<HTMLInputElement>("#w-seed").value),
    };
    this.busy = true;
    try {
      this.session = await this.client.createSession(body);
      this.history = (await this.client.getMetrics(this.session.id)).history;
    } catch (err) {
      const box = this.el("#wizard-error");
      box.hidden = false;
      box.textContent =
        err instanceof ApiError ? `rejected (${err.status}): ${err.message}` : String(err);
      return;
    } finally {
      this.busy = false;
    }
    this.renderSession();
  }

  // --- session view ---------------------------------------------------

  renderSession(): void {
    const s = this.session;
    if (!s) return;
    this.el("#session-area").innerHTML = `
      <div id="banner" class="error" hidden></div>
      <section id="status-line">
        <b>session ${esc(s.id)}</b> — ${esc(s.dataset)} / ${esc(s.strategy)} / ${esc(s.mode)}
        — iteration <span id="st-iter">${s.iteration}</span>
        — status <span id="st-status">${esc(s.status)}</span>
        — pool L=<span id="st-labeled">${s.pool.labeled}</span>
          U=<span id="st-unlabeled">${s.pool.unlabeled}</span>
      </section>
      <section id="steering">
        <h2>steering</h2>
        <label>confidence c
          <input id="s-c" type="range" min="0" max="1" step="0.05" value="${s.params.c}">
          <span id="s-c-value">${s.params.c.toFixed(2)}</span>
        </label>
        <label>T1 <input id="s-t1" type="number" min="0" value="${s.params.T1}"></label>
        <label>T2 <input id="s-t2" type="number" min="1" value="${s.params.T2}"></label>
        <span id="s-preview"></span>
        <button id="s-apply" type="button">apply</button>
      </section>
      <section id="batch-section">
        <h2>batch</h2>
        <button id="b-fetch" type="button">fetch next batch</button>
        <div id="batch-cards"></div>
        <button id="b-submit" type="button" disabled>submit labels</button>
      </section>
      <section id="charts">
        <h2>learning curves</h2>
        <div id="chart-prauc"></div>
        <div id="chart-discovery"></div>
      </section>`;
    const slider = this.el<HTMLInputElement>("#s-c");
    slider.addEventListener("input", () => {
      this.el("#s-c-value").textContent = Number(slider.value).toFixed(2);
      this.updateSteeringPreview();
    });
    this.el("#s-t1").addEventListener("input", () => this.updateSteeringPreview());
    this.el("#s-t2").addEventListener("input", () => this.updateSteeringPreview());
    this.el("#s-apply").addEventListener("click", () => void this.applySteering());
    this.el("#b-fetch").addEventListener("click", () => void this.fetchBatch());
    this.el("#b-submit").addEventListener("click", () => void this.submitBatch());
    this.updateSteeringPreview();
    this.renderCharts();
  }

  updateSteeringPreview(): void {
    const s = this.session;
    if (!s) return;
    const pending = s.status === "awaiting_labels";
    const params = {
      b: s.params.b,
      c: Number(this.el<HTMLInputElement>("#s-c").value),
      T1: Number(this.el<HTMLInputElement>("#s-t1").value),
      T2: Number(this.el<HTMLInputElement>("#s-t2").value),
    };
    const box = this.el("#s-preview");
    const problem = validateParams(params);
    if (problem) {
      box.textContent = `invalid: ${problem}`;
    } else if (s.strategy !== "adaptive") {
      box.textContent = "steering applies to adaptive sessions only";
    } else if (s.iteration < 1) {
      box.textContent = "takes effect after the bootstrap batch";
    } else {
      const next: Allocation = balance(Math.max(s.iteration, 1), params);
      box.textContent = `next batch: ${next.nRepr} representative + ${next.nInfo} informative`;
    }
    for (const id of ["#s-c", "#s-t1", "#s-t2", "#s-apply"]) {
      this.el<HTMLInputElement | HTMLButtonElement>(id).disabled = pending;
    }
  }

  async applySteering(): Promise<void> {
    const s = this.session;
    if (!s || this.busy) return;
    this.busy = true;
    try {
      this.session = await this.client.patchParams(s.id, {
        c: Number(this.el<HTMLInputElement>("#s-c").value),
        T1: Number(this.el<HTMLInputElement>("#s-t1").value),
        T2: Number(this.el<HTMLInputElement>("#s-t2").value),
      });
      this.refreshStatusLine();
      this.updateSteeringPreview();
      this.banner(null);
    } catch (err) {
      this.banner(err);
    } finally {
      this.busy = false;
    }
  }

  async fetchBatch(): Promise<void> {
    const s = this.session;
    if (!s || this.busy) return;
    this.busy = true;
    try {
      const res = await this.client.proposeBatch(s.id);
      this.session = res.session;
      this.batch = res.batch;
      this.chosen.clear();
      this.renderBatchCards();
      this.refreshStatusLine();
      this.updateSteeringPreview();
      this.banner(null);
    } catch (err) {
      if (err instanceof ApiError && err.status === 410) {
        this.finish("unlabeled pool exhausted");
      } else {
        this.banner(err);
      }
    } finally {
      this.busy = false;
    }
  }

  renderBatchCards(): void {
    const cards = this.batch
      .map((entry) => {
        const rows = Object.entries(entry.features)
          .map(
            ([name, value]) =>
              `<tr><td>${esc(name)}</td><td title="raw: ${esc(entry.raw[name])}">${(value as number).toFixed(3)}</td></tr>`,
          )
          .join("");
        return `
        <div class="card" data-index="${entry.index}">
          <div class="card-head">
            <span class="badge badge-${esc(entry.provenance)}">${esc(entry.provenance)}</span>
            #${entry.index} — P(anomaly)=${fmtProb(entry.probability_anomaly)}
            — score ${entry.score.toFixed(3)}
          </div>
          <table class="features">${rows}</table>
          <div class="card-actions">
            <button type="button" class="label-normal">normal</button>
            <button type="button" class="label-anomaly">anomaly</button>
            <span class="chosen"></span>
          </div>
        </div>`;
      })
      .join("");
    const holder = this.el("#batch-cards");
    holder.innerHTML = cards;
    for (const card of Array.from(holder.querySelectorAll<HTMLElement>(".card"))) {
      const idx = Number(card.dataset.index);
      card.querySelector(".label-normal")!.addEventListener("click", () => this.labelCard(idx, 0));
      card.querySelector(".label-anomaly")!.addEventListener("click", () => this.labelCard(idx, 1));
    }
    this.el<HTMLButtonElement>("#b-submit").disabled = true;
    this.el<HTMLButtonElement>("#b-fetch").disabled = true;
  }

  labelCard(index: number, label: 0 | 1): void {
    this.chosen.set(index, label);
    const card = this.root.querySelector<HTMLElement>(`.card[data-index="${index}"]`);
    if (card) card.querySelector(".chosen")!.textContent = label === 1 ? "anomaly" : "normal";
    const all = this.batch.length > 0 && this.batch.every((e) => this.chosen.has(e.index));
    this.el<HTMLButtonElement>("#b-submit").disabled = !all;
  }

  async submitBatch(): Promise<void> {
    const s = this.session;
    if (!s || this.busy || this.chosen.size !== this.batch.length) return;
    const labels: Record<string, number> = {};
    for (const [idx, lab] of this.chosen) labels[String(idx)] = lab;
    this.busy = true;
    try {
      const res = await this.client.submitLabels(s.id, labels);
      this.session = res.session;
      this.history.push(res.record);
      this.batch = [];
      this.chosen.clear();
      this.el("#batch-cards").innerHTML = "";
      this.el<HTMLButtonElement>("#b-submit").disabled = true;
      this.el<HTMLButtonElement>("#b-fetch").disabled = false;
      this.refreshStatusLine();
      this.updateSteeringPreview();
      this.renderCharts();
      this.banner(null);
      if (this.session.status === "finished") this.finish("iteration budget reached");
    } catch (err) {
      this.banner(err);
    } finally {
      this.busy = false;
    }
  }

  // --- presentation helpers --------------------------------------------

  renderCharts(): void {
    const recs = this.history;
    const discovery = recs.map((r) => ({ x: r.labels_used, y: r.anomalies_discovered }));
    this.el("#chart-discovery").innerHTML = lineChartSvg(
      discovery,
      "true anomalies discovered",
      "count",
    );
    if (this.session?.metrics_available) {
      const pr = recs
        .filter((r) => r.prauc !== null)
        .map((r) => ({ x: r.labels_used, y: r.prauc as number }));
      this.el("#chart-prauc").innerHTML = lineChartSvg(pr, "PRAUC on held-out test set", "PRAUC");
    } else {
      this.el("#chart-prauc").innerHTML =
        `<div class="notice" id="no-ground-truth">no ground truth in live mode — PRAUC unavailable</div>`;
    }
  }

  refreshStatusLine(): void {
    const s = this.session;
    if (!s) return;
    this.el("#st-iter").textContent = String(s.iteration);
    this.el("#st-status").textContent = s.status;
    this.el("#st-labeled").textContent = String(s.pool.labeled);
    this.el("#st-unlabeled").textContent = String(s.pool.unlabeled);
  }

  finish(reason: string): void {
    this.el("#batch-section").innerHTML =
      `<div class="notice" id="finished">session finished: ${esc(reason)}</div>`;
  }

  banner(err: unknown | null): void {
    const box = this.el("#banner");
    if (err === null) {
      box.hidden = true;
      return;
    }
    box.hidden = false;
    box.textContent = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
  }

  async pollOnce(): Promise<void> {
    if (!this.session || this.busy) return;
    try {
      const fresh = await this.client.getSession(this.session.id);
      this.session = fresh;
      this.refreshStatusLine();
    } catch {
      // transient poll failures are ignored; mutations surface their own errors
    }
  }

  el<T extends HTMLElement = HTMLElement>(selector: string): T {
    const found = this.root.querySelector<T>(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found;
  }
}
