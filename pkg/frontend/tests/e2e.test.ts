/**
 * End-to-end: boots the real annotation service (python, uvicorn) and
 * drives it exclusively through the browser client code.  Checks that
 * protocol-violating submissions are impossible client-side and rejected
 * server-side, that three simulated annotators completing a 10-pair
 * fixture yield an export matching independent majority/alpha oracles,
 * and that a service restarted on the same log reproduces the export
 * byte for byte.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationSession, ProtocolViolation } from "../src/session.js";

const N_PAIRS = 10;
const PORT = 18650 + Math.floor(Math.random() * 500);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let dataPath: string;
let logPath: string;
let server: ChildProcess | null = null;

function pairId(i: number): string {
  return `p${String(i).padStart(3, "0")}`;
}

function writeFixture(): void {
  const lines: string[] = [];
  for (let i = 0; i < N_PAIRS; i++) {
    const code = `def helper_${i}(value):\n    """Process item ${i}."""\n    return value\n`;
    lines.push(
      JSON.stringify({
        pair_id: pairId(i),
        query: `python process item ${i}`,
        code,
      }),
    );
  }
  writeFileSync(dataPath, lines.join("\n") + "\n");
}

function startServer(port: number): ChildProcess {
  const child = spawn(
    "python3",
    ["-m", "codematch.cli", "serve", "--data", dataPath, "--log", logPath, "--port", String(port)],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });
  child.on("exit", (code) => {
    if (code && code !== 0) {
      // surfaced by the readiness timeout; keep the log for debugging
      console.error(`service exited with ${code}:\n${stderr}`);
    }
  });
  return child;
}

async function waitReady(base: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${base}/progress`);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("annotation service did not become ready");
}

async function stopServer(child: ChildProcess | null): Promise<void> {
  if (!child) return;
  child.kill("SIGTERM");
  await new Promise<void>((resolve) => {
    const timer = setTimeout(() => {
      child.kill("SIGKILL");
      resolve();
    }, 5_000);
    child.on("exit", () => {
      clearTimeout(timer);
      resolve();
    });
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "annotation-e2e-"));
  dataPath = join(workDir, "candidates.jsonl");
  logPath = join(workDir, "votes.jsonl");
  writeFixture();
  server = startServer(PORT);
  await waitReady(BASE);
});

afterAll(async () => {
  await stopServer(server);
});

type Plan = Record<string, { intent: "yes" | "no"; answer?: 0 | 1 }>;

// three annotators; by pair: unanimous yes/1, unanimous 0, 2:1 splits both
// ways, one no-intent majority (p004), one with too few answers (p005)
const PLANS: Plan[] = [
  {
    p000: { intent: "yes", answer: 1 },
    p001: { intent: "yes", answer: 0 },
    p002: { intent: "yes", answer: 1 },
    p003: { intent: "yes", answer: 0 },
    p004: { intent: "no" },
    p005: { intent: "yes", answer: 1 },
    p006: { intent: "yes", answer: 1 },
    p007: { intent: "yes", answer: 0 },
    p008: { intent: "yes", answer: 0 },
    p009: { intent: "yes", answer: 1 },
  },
  {
    p000: { intent: "yes", answer: 1 },
    p001: { intent: "yes", answer: 0 },
    p002: { intent: "yes", answer: 1 },
    p003: { intent: "yes", answer: 0 },
    p004: { intent: "no" },
    p005: { intent: "no" },
    p006: { intent: "yes", answer: 1 },
    p007: { intent: "yes", answer: 1 },
    p008: { intent: "yes", answer: 0 },
    p009: { intent: "yes", answer: 0 },
  },
  {
    p000: { intent: "yes", answer: 1 },
    p001: { intent: "yes", answer: 0 },
    p002: { intent: "yes", answer: 0 },
    p003: { intent: "yes", answer: 1 },
    p004: { intent: "yes", answer: 1 },
    p005: { intent: "yes", answer: 1 },
    p006: { intent: "yes", answer: 1 },
    p007: { intent: "yes", answer: 0 },
    p008: { intent: "yes", answer: 0 },
    p009: { intent: "yes", answer: 1 },
  },
];

/** Expected answer-vote multisets implied by the plans. */
function expectedAnswerVotes(): Map<string, number[]> {
  const votes = new Map<string, number[]>();
  for (const plan of PLANS) {
    for (const [pid, action] of Object.entries(plan)) {
      if (action.intent === "yes" && action.answer !== undefined) {
        const list = votes.get(pid) ?? [];
        list.push(action.answer);
        votes.set(pid, list);
      }
    }
  }
  return votes;
}

function majorityOracle(votes: number[]): 0 | 1 | null {
  const ones = votes.filter((v) => v === 1).length;
  const zeros = votes.length - ones;
  if (ones === zeros) return null;
  return ones > zeros ? 1 : 0;
}

/** Independent pair-enumeration alpha for nominal data. */
function alphaOracle(valueLists: number[][]): number {
  const usable = valueLists.filter((vs) => vs.length >= 2);
  const n = usable.reduce((acc, vs) => acc + vs.length, 0);
  let dObs = 0;
  for (const vs of usable) {
    let mismatches = 0;
    for (let a = 0; a < vs.length; a++) {
      for (let b = 0; b < vs.length; b++) {
        if (a !== b && vs[a] !== vs[b]) mismatches++;
      }
    }
    dObs += mismatches / (vs.length - 1);
  }
  dObs /= n;
  const pooled = usable.flat();
  let mismatches = 0;
  for (let a = 0; a < n; a++) {
    for (let b = 0; b < n; b++) {
      if (a !== b && pooled[a] !== pooled[b]) mismatches++;
    }
  }
  const dExp = mismatches / (n * (n - 1));
  return 1 - dObs / dExp;
}

async function runAnnotator(client: ApiClient, plan: Plan, name: string): Promise<number> {
  const session = new AnnotationSession(client);
  await session.start(name);
  for (let guard = 0; guard <= 50; guard++) {
    const state = session.snapshot;
    if (state.phase !== "intent") break;
    const action = plan[state.task!.pair_id];
    if (!action) throw new Error(`no plan for ${state.task!.pair_id}`);
    session.chooseIntent(action.intent);
    await session.submit(action.answer);
    const after = session.snapshot;
    if (after.phase === "error") {
      throw new Error(`session error: ${after.errorMessage}`);
    }
  }
  const finished = session.snapshot;
  expect(finished.phase).toBe("done");
  return finished.completed;
}

describe("annotation flow end to end", () => {
  it("client gating blocks answer-with-no-intent before the wire; the server rejects it too", async () => {
    const client = new ApiClient(BASE);
    const session = new AnnotationSession(client);
    await session.start("gatekeeper-check");
    expect(session.snapshot.phase).toBe("intent");
    expect(session.answerEnabled).toBe(false);
    const assigned = session.snapshot.task!.pair_id;

    session.chooseIntent("no");
    await expect(session.submit(1)).rejects.toThrow(ProtocolViolation);

    // bypass the client on purpose: the server must also refuse
    const raw = await fetch(`${BASE}/judgments`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        pair_id: assigned,
        annotator_id: session.snapshot.annotatorId,
        intent: "no",
        answer: 1,
      }),
    });
    expect(raw.status).toBe(400);

    // the clean no-intent judgment still goes through
    await session.submit();
    expect(session.snapshot.completed).toBe(1);
  });

  it("three annotators complete the fixture; export matches the oracles; replay is byte-identical", async () => {
    const client = new ApiClient(BASE);
    const completed = [];
    for (let a = 0; a < PLANS.length; a++) {
      completed.push(await runAnnotator(client, PLANS[a]!, `annotator-${a}`));
    }
    // every annotator judged every pair still in circulation when they ran
    expect(Math.max(...completed)).toBe(N_PAIRS);

    const firstExport = await (await fetch(`${BASE}/export`)).text();
    const payload = JSON.parse(firstExport);

    const votes = expectedAnswerVotes();
    const expectedRetained = new Map<string, number>();
    for (const [pid, vs] of votes) {
      const label = majorityOracle(vs);
      // retained: majority intent yes, three answers, decisive majority
      if (vs.length >= 3 && label !== null) {
        expectedRetained.set(pid, label);
      }
    }
    const exported = new Map<string, number>(
      payload.pairs.map((p: { pair_id: string; label: number }) => [p.pair_id, p.label]),
    );
    expect([...exported.keys()].sort()).toEqual([...expectedRetained.keys()].sort());
    for (const [pid, label] of expectedRetained) {
      expect(exported.get(pid)).toBe(label);
    }
    // p004 gathered a no-intent majority, p005 only two answers
    expect(exported.has("p004")).toBe(false);
    expect(exported.has("p005")).toBe(false);

    const expectedAlpha = alphaOracle([...votes.values()]);
    expect(payload.report.alpha_answer).toBeCloseTo(expectedAlpha, 9);

    // restart on the same log: the export must reproduce byte for byte
    await stopServer(server);
    server = null;
    const replayPort = PORT + 501;
    const replayServer = startServer(replayPort);
    try {
      await waitReady(`http://127.0.0.1:${replayPort}`);
      const replayed = await (await fetch(`http://127.0.0.1:${replayPort}/export`)).text();
      expect(replayed).toBe(firstExport);
    } finally {
      await stopServer(replayServer);
    }
  });
});
