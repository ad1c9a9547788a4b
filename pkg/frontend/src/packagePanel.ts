import { ApiError, getPackage } from "./api";
import { chainPills } from "./chain";
import type { TtpDocument } from "./types";

export interface PackagePanelOptions {
  getPackageFn?: (name: string) => Promise<TtpDocument[]>;
}

/**
 * Shows one package's TTP chain as arrow-linked pills. Deceptive pills
 * are styled apart from execution/neutral ones; the toggle swaps the
 * pill text between kind names (abstract) and concrete values where the
 * chain carries them (detailed).
 */
export class PackagePanel {
  private readonly getPackageFn: (name: string) => Promise<TtpDocument[]>;
  private docs: TtpDocument[] = [];
  private selected = 0;
  detailed = false;

  constructor(
    private readonly root: HTMLElement,
    options: PackagePanelOptions = {},
  ) {
    this.getPackageFn = options.getPackageFn ?? getPackage;
    this.root.innerHTML =
      '<div class="placeholder">Click a citation to inspect a package.</div>';
  }

  async open(name: string): Promise<void> {
    try {
      this.docs = await this.getPackageFn(name);
      this.selected = 0;
      this.detailed = false;
      this.render();
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.root.innerHTML = `
          <div class="not-indexed" data-role="not-indexed">
            <strong></strong> is not indexed.
          </div>`;
        this.root.querySelector("strong")!.textContent = name;
      } else {
        const kind = error instanceof ApiError ? error.kind : "network failure";
        this.root.innerHTML = `<div class="error" data-role="panel-error"></div>`;
        this.root.querySelector('[data-role="panel-error"]')!.textContent = kind;
      }
    }
  }

  toggle(): void {
    this.detailed = !this.detailed;
    this.render();
  }

  private render(): void {
    const doc = this.docs[this.selected];
    if (doc === undefined) return;
    this.root.innerHTML = `
      <div class="package-head">
        <h3 data-role="package-name"></h3>
        <button type="button" data-role="toggle"></button>
      </div>
      <div class="versions" data-role="versions"></div>
      <div class="chain" data-role="chain"></div>
      <div class="intents" data-role="intents"></div>
      <pre class="analysis" data-role="analysis"></pre>
    `;
    this.root.querySelector('[data-role="package-name"]')!.textContent =
      `${doc.package_name} ${doc.version}`.trim();
    const toggle = this.root.querySelector<HTMLButtonElement>('[data-role="toggle"]')!;
    toggle.textContent = this.detailed ? "show abstract" : "show detailed";
    toggle.addEventListener("click", () => this.toggle());

    const versions = this.root.querySelector('[data-role="versions"]')!;
    if (this.docs.length > 1) {
      this.docs.forEach((candidate, index) => {
        const pick = document.createElement("button");
        pick.type = "button";
        pick.dataset.role = "version";
        pick.textContent = candidate.version || "(unversioned)";
        pick.disabled = index === this.selected;
        pick.addEventListener("click", () => {
          this.selected = index;
          this.render();
        });
        versions.append(pick);
      });
    }

    const chain = this.root.querySelector('[data-role="chain"]')!;
    const pills = chainPills(doc);
    if (pills.length === 0) {
      chain.textContent = "no attack vectors recorded";
    }
    pills.forEach((pill, index) => {
      if (index > 0) {
        const arrow = document.createElement("span");
        arrow.className = "arrow";
        arrow.textContent = "→";
        chain.append(arrow);
      }
      const element = document.createElement("span");
      element.className = `pill ${pill.category}`;
      element.dataset.role = "pill";
      element.dataset.kind = pill.kind;
      element.textContent =
        this.detailed && pill.detail !== null ? pill.detail : pill.kind;
      element.title = pill.detail ?? pill.kind;
      chain.append(element);
    });

    const intents = this.root.querySelector('[data-role="intents"]')!;
    for (const label of doc.intent_labels ?? []) {
      const chip = document.createElement("span");
      chip.className = "intent";
      chip.textContent = label;
      intents.append(chip);
    }
    this.root.querySelector('[data-role="analysis"]')!.textContent = doc.analysis;
  }
}
