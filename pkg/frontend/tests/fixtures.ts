import type { AskResponse, GraphPayload, TtpDocument } from "../src/types";

export const COLORAM_DOC: TtpDocument = {
  package_name: "coloram",
  version: "0.2.7",
  ecosystem: "pypi",
  deceptive_ttp:
    "{typosquatting('Colorama')→imitated-version('0.2.7')" +
    "→fake-description('Official Stanford Karel library used in CS 106A')" +
    "→fake-contact('tyep@XXX.XX')}",
  execution_ttp:
    "{cmd('exec()')→evasion('base64')" +
    "→url-ip-port('http://20.224.2.213//inject/ctE6toLDoHBbJApj')}",
  analysis:
    "coloram imitates the colorama package, hides a base64 payload in setup.py " +
    "and reaches out to a hardcoded URL.",
  intent_labels: ["Trojan", "Downloader"],
};

export const STUB_ANSWER: AskResponse = {
  answer: "coloram typosquats colorama and exfiltrates data to a hardcoded URL.",
  citations: [{ package_name: "coloram", version: "0.2.7", score: 0.91 }],
  model_name: "mock",
  elapsed_ms: 12,
};

export const HALF_WEIGHT_GRAPH: GraphPayload = {
  nodes: ["cmd", "evasion", "conceal"],
  edges: [
    { from: "cmd", to: "evasion", count: 1, weight: 0.5 },
    { from: "cmd", to: "conceal", count: 1, weight: 0.5 },
  ],
};

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.append(root);
  return root;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
