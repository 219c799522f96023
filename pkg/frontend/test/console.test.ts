import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";
import { ConsoleController } from "../src/console.js";
import type { PipelineConfig, PipelineTrace } from "../src/types.js";

interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/** Fake service: records every request and replies from a route table. */
class FakeService {
  calls: RecordedCall[] = [];

  constructor(private readonly routes: Record<string, () => { status: number; payload: unknown }>) {}

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.calls.push({ url, method, body });
    const key = `${method} ${url}`;
    const route = this.routes[key];
    if (!route) {
      return new Response(JSON.stringify({ detail: `no route ${key}` }), { status: 404 });
    }
    const { status, payload } = route();
    return new Response(JSON.stringify(payload), { status });
  };
}

const CONFIG: PipelineConfig = {
  knowledge_backend: { kind: "echo", parameters: {} },
  response_backend: { kind: "template", parameters: { template: "I think: {k}" } },
};

const EPISODE_JSON = JSON.stringify({
  example_id: "nq-cowboys",
  turns: [{ speaker: "user", text: "When did the dallas cowboys win their last playoff game?" }],
  gold_answers: ["2014"],
});

function makeTrace(overrides: Partial<PipelineTrace>): PipelineTrace {
  return {
    serialized_knowledge_input: "user: When did the dallas cowboys win their last playoff game?",
    predicted_knowledge: "2014",
    injected_knowledge: null,
    knowledge_used: "2014",
    serialized_response_input: "...\n__knowledge__ 2014 __endknowledge__",
    knowledge_beams: [{ text: "2014", score: 0.0 }],
    beams: [{ text: "The last time they won was in 2014.", score: 0.0 }],
    selected_index: 0,
    response: "The last time they won was in 2014.",
    filter_applied: false,
    filter_hit: false,
    ...overrides,
  };
}

function makeConsole(routes: Record<string, () => { status: number; payload: unknown }>) {
  const service = new FakeService(routes);
  const controller = new ConsoleController(new ApiClient("", service.fetch), CONFIG, 3);
  return { service, controller };
}

describe("loading an episode", () => {
  it("creates a session and prefills the predicted knowledge", async () => {
    const { service, controller } = makeConsole({
      "POST /api/sessions": () => ({ status: 200, payload: { session_id: "s-1" } }),
      "POST /api/sessions/s-1/knowledge": () => ({
        status: 200,
        payload: { predicted_knowledge: "2014", beams: [{ text: "2014", score: 0.0 }] },
      }),
    });
    const ok = await controller.loadEpisode(EPISODE_JSON);
    expect(ok).toBe(true);
    expect(controller.state.sessionId).toBe("s-1");
    expect(controller.state.predictedKnowledge).toBe("2014");
    expect(controller.state.knowledgeText).toBe("2014");
    expect(controller.knowledgeEdited).toBe(false);
    expect(service.calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST /api/sessions",
      "POST /api/sessions/s-1/knowledge",
    ]);
    expect(service.calls[0]!.body).toMatchObject({ config: CONFIG, seed: 3 });
  });

  it("reports malformed JSON inline without any request", async () => {
    const { service, controller } = makeConsole({});
    const ok = await controller.loadEpisode("{not json");
    expect(ok).toBe(false);
    expect(controller.state.error?.message).toContain("could not parse episode");
    expect(controller.state.error?.retryable).toBe(false);
    expect(service.calls).toEqual([]);
  });

  it("rejects episode JSON without turns", async () => {
    const { service, controller } = makeConsole({});
    const ok = await controller.loadEpisode('{"example_id": "x"}');
    expect(ok).toBe(false);
    expect(service.calls).toEqual([]);
  });
});

describe("probing", () => {
  function probeSetup(trace: PipelineTrace) {
    return makeConsole({
      "POST /api/sessions": () => ({ status: 200, payload: { session_id: "s-1" } }),
      "POST /api/sessions/s-1/knowledge": () => ({
        status: 200,
        payload: { predicted_knowledge: "2014", beams: [{ text: "2014", score: 0.0 }] },
      }),
      "POST /api/sessions/s-1/respond": () => ({ status: 200, payload: trace }),
    });
  }

  it("omits injected_knowledge when the field is unedited", async () => {
    const { service, controller } = probeSetup(makeTrace({}));
    await controller.loadEpisode(EPISODE_JSON);
    await controller.probe();
    const respond = service.calls.at(-1)!;
    expect(respond.url).toBe("/api/sessions/s-1/respond");
    expect(respond.body).not.toHaveProperty("injected_knowledge");
  });

  it("carries the edited knowledge verbatim and renders the service trace untouched", async () => {
    const serverTrace = makeTrace({
      injected_knowledge: "several years ago",
      knowledge_used: "several years ago",
      response: "I think the last time they won a playoff game was several years ago.",
    });
    const { service, controller } = probeSetup(serverTrace);
    await controller.loadEpisode(EPISODE_JSON);
    controller.setKnowledge("several years ago");
    expect(controller.knowledgeEdited).toBe(true);

    const trace = await controller.probe();
    const respond = service.calls.at(-1)!;
    expect(respond.body).toMatchObject({ injected_knowledge: "several years ago" });

    // rendered state comes from the recorded HTTP response, nothing is
    // computed locally: the history entry is deep-equal to the wire payload
    expect(trace?.knowledge_used).toBe("several years ago");
    expect(controller.state.history).toHaveLength(1);
    expect(controller.state.history[0]).toEqual(serverTrace);
    expect(service.calls.map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST /api/sessions",
      "POST /api/sessions/s-1/knowledge",
      "POST /api/sessions/s-1/respond",
    ]);
  });

  it("sends the slider confidence", async () => {
    const { service, controller } = probeSetup(makeTrace({}));
    await controller.loadEpisode(EPISODE_JSON);
    controller.setConfidence(6);
    await controller.probe();
    expect(service.calls.at(-1)!.body).toMatchObject({ confidence: 6 });
  });

  it("clamps the slider into [0, 10]", () => {
    const { controller } = makeConsole({});
    controller.setConfidence(42);
    expect(controller.state.confidence).toBe(10);
    controller.setConfidence(-3);
    expect(controller.state.confidence).toBe(0);
  });

  it("two identical probes render identical responses", async () => {
    const { controller } = probeSetup(makeTrace({}));
    await controller.loadEpisode(EPISODE_JSON);
    const first = await controller.probe();
    const second = await controller.probe();
    expect(first).toEqual(second);
    expect(controller.state.history[0]).toEqual(controller.state.history[1]);
  });

  it("allows a single in-flight probe", async () => {
    let release!: (value: Response) => void;
    const gate = new Promise<Response>((resolve) => (release = resolve));
    let respondCalls = 0;
    const fetchImpl: FetchLike = async (url, init) => {
      if (url.endsWith("/respond")) {
        respondCalls += 1;
        return gate;
      }
      if (url.endsWith("/knowledge")) {
        return new Response(JSON.stringify({ predicted_knowledge: "2014", beams: [] }), { status: 200 });
      }
      return new Response(JSON.stringify({ session_id: "s-1" }), { status: 200 });
    };
    const controller = new ConsoleController(new ApiClient("", fetchImpl), CONFIG);
    await controller.loadEpisode(EPISODE_JSON);

    const inFlight = controller.probe();
    expect(controller.state.pending).toBe(true);
    const blocked = await controller.probe(); // guard: no second request
    expect(blocked).toBeNull();
    expect(respondCalls).toBe(1);

    release(new Response(JSON.stringify(makeTrace({})), { status: 200 }));
    expect(await inFlight).not.toBeNull();
    expect(controller.state.pending).toBe(false);
  });

  it("probe before a session is a no-op", async () => {
    const { service, controller } = makeConsole({});
    expect(await controller.probe()).toBeNull();
    expect(service.calls).toEqual([]);
  });
});

describe("failure handling", () => {
  it("maps 502 to a retryable error with the step label", async () => {
    const { controller } = makeConsole({
      "POST /api/sessions": () => ({ status: 200, payload: { session_id: "s-1" } }),
      "POST /api/sessions/s-1/knowledge": () => ({
        status: 200,
        payload: { predicted_knowledge: "2014", beams: [] },
      }),
      "POST /api/sessions/s-1/respond": () => ({
        status: 502,
        payload: { detail: { step: "response", error: "backend down" } },
      }),
    });
    await controller.loadEpisode(EPISODE_JSON);
    const trace = await controller.probe();
    expect(trace).toBeNull();
    expect(controller.state.error).toEqual({
      message: "service error 502 (response step)",
      step: "response",
      retryable: true,
    });
    expect(controller.state.history).toHaveLength(0);
  });

  it("ApiError exposes status and step", async () => {
    const service = new FakeService({
      "POST /api/sessions/s-9/knowledge": () => ({
        status: 502,
        payload: { detail: { step: "knowledge", error: "nope" } },
      }),
    });
    const api = new ApiClient("", service.fetch);
    await expect(api.knowledge("s-9")).rejects.toMatchObject({ status: 502, step: "knowledge" });
    const unknown = await api.getSession("missing").catch((e) => e);
    expect(unknown).toBeInstanceOf(ApiError);
    expect((unknown as ApiError).status).toBe(404);
  });
});
