import type { ChainPill, TtpDocument, VectorCategory } from "./types";

const DECEPTIVE = new Set([
  "typosquatting",
  "imitated-version",
  "fake-description",
  "imitated-url",
  "malicious-dependency",
  "fake-contact",
]);

const EXECUTION_ATTACK = new Set(["evasion", "conceal", "cmd", "malicious-url"]);

export function categoryOf(kind: string): VectorCategory {
  if (DECEPTIVE.has(kind)) return "deceptive";
  if (EXECUTION_ATTACK.has(kind)) return "execution-attack";
  return "neutral";
}

// One chain element: a kind name optionally annotated with a concrete
// value, e.g. typosquatting('Colorama') or plain cmd.
const SEGMENT = /^\s*([a-z][a-z0-9/ _-]*?)\s*(?:\(\s*'?(.*?)'?\s*\))?\s*$/i;

/** Parse an arrow chain ("{a→b('x')→c}") into ordered pills. */
export function parseChain(text: string): ChainPill[] {
  let body = text.trim();
  if (body.startsWith("{") && body.endsWith("}")) body = body.slice(1, -1);
  if (!body.trim()) return [];
  return body
    .split(/→|->/)
    .map((segment) => segment.trim())
    .filter((segment) => segment.length > 0)
    .map((segment) => {
      const match = SEGMENT.exec(segment);
      const kind = (match ? match[1] : segment).trim().toLowerCase();
      const detail = match && match[2] !== undefined && match[2] !== "" ? match[2] : null;
      return { kind, detail, category: categoryOf(kind) };
    });
}

/** Full ordered pill list for a document: deceptive prefix then execution. */
export function chainPills(doc: TtpDocument): ChainPill[] {
  return [...parseChain(doc.deceptive_ttp), ...parseChain(doc.execution_ttp)];
}
