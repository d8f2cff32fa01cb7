/** Typed client for the recommender service endpoints. */

export interface Recommendation {
  song_id: string;
  title: string;
  similarity: number;
}

export interface ClassifyResponse {
  probs: number[];
  top_genre: string;
  recommendations: Recommendation[];
  spectrogram_png_base64: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ServiceApi {
  getGenres(): Promise<string[]>;
  classifyClip(file: Blob): Promise<ClassifyResponse>;
}

/** Parse JSON defensively; error pages are not always JSON. */
async function readJson(res: Response): Promise<unknown> {
  const raw = await res.text();
  try {
    return raw ? JSON.parse(raw) : null;
  } catch {
    return null;
  }
}

function detailOf(body: unknown, fallback: string): string {
  if (body && typeof body === "object" && "detail" in body) {
    const d = (body as { detail: unknown }).detail;
    if (typeof d === "string") return d;
  }
  return fallback;
}

export function createApi(baseUrl = ""): ServiceApi {
  return {
    async getGenres(): Promise<string[]> {
      const res = await fetch(`${baseUrl}/genres`);
      const body = await readJson(res);
      if (!res.ok) {
        throw new ApiError(res.status, detailOf(body, `genres failed (${res.status})`));
      }
      return (body as { genres: string[] }).genres;
    },

    async classifyClip(file: Blob): Promise<ClassifyResponse> {
      const form = new FormData();
      form.append("file", file);
      const res = await fetch(`${baseUrl}/classify`, { method: "POST", body: form });
      const body = await readJson(res);
      if (!res.ok) {
        throw new ApiError(res.status, detailOf(body, `classify failed (${res.status})`));
      }
      return body as ClassifyResponse;
    },
  };
}
