import { getHealth } from "./api";
import { ChatPanel } from "./chat";
import { GraphView } from "./graphView";
import { PackagePanel } from "./packagePanel";

const app = document.querySelector<HTMLDivElement>("#app");

if (app) {
  app.innerHTML = `
    <header>
      <h1>TTP analyst console</h1>
      <span class="health" data-role="health">checking service…</span>
    </header>
    <main>
      <section class="chat" id="chat-panel"></section>
      <aside>
        <section class="package" id="package-panel"></section>
        <section class="graph">
          <div class="graph-head">
            <h2>Attack-vector transitions</h2>
            <button type="button" id="graph-load">load graph</button>
          </div>
          <div id="graph-view"></div>
        </section>
      </aside>
    </main>
  `;

  const packagePanel = new PackagePanel(document.querySelector("#package-panel")!);
  new ChatPanel(document.querySelector("#chat-panel")!, {
    onCitationClick: (name) => void packagePanel.open(name),
  });
  const graphView = new GraphView(document.querySelector("#graph-view")!);
  document
    .querySelector("#graph-load")!
    .addEventListener("click", () => void graphView.load());

  const health = document.querySelector<HTMLSpanElement>('[data-role="health"]')!;
  getHealth()
    .then((status) => {
      health.textContent =
        `${status.index_size} package(s) indexed · provider ${status.provider}`;
    })
    .catch(() => {
      health.textContent = "service unreachable";
    });
}
