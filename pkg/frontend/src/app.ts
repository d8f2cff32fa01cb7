/** Single-screen flow: pick a clip, classify, show the distribution, the
 * rendered spectrogram, and the five recommendations.
 *
 * At most one in-flight classification is honored: each submission takes a
 * sequence number and responses from superseded submissions are dropped.
 */

import { ApiError, ClassifyResponse, ServiceApi } from "./api.js";
import { renderProbabilityChart } from "./chart.js";

export type Status = "idle" | "uploading" | "done" | "error";

export interface AppElements {
  chart: HTMLElement;
  banner: HTMLElement;
  topGenre: HTMLElement;
  recommendations: HTMLElement;
  spectrogram: HTMLImageElement;
  status: HTMLElement;
}

export class ClassifyApp {
  private genres: string[] = [];
  private sequence = 0;
  status: Status = "idle";

  constructor(
    private readonly api: ServiceApi,
    private readonly el: AppElements,
  ) {}

  async init(): Promise<void> {
    this.genres = await this.api.getGenres();
  }

  genreLabels(): readonly string[] {
    return this.genres;
  }

  private setStatus(status: Status): void {
    this.status = status;
    this.el.status.textContent = status;
  }

  private showBanner(message: string): void {
    this.el.banner.textContent = message;
    this.el.banner.hidden = false;
  }

  private clearBanner(): void {
    this.el.banner.textContent = "";
    this.el.banner.hidden = true;
  }

  /** Upload one clip; stale responses (superseded submissions) are ignored. */
  async submitClip(file: Blob): Promise<void> {
    const seq = ++this.sequence;
    this.clearBanner();
    this.setStatus("uploading");
    try {
      const res = await this.api.classifyClip(file);
      if (seq !== this.sequence) return; // a newer upload owns the view
      this.renderResult(res);
      this.setStatus("done");
    } catch (err) {
      if (seq !== this.sequence) return;
      this.setStatus("error");
      if (err instanceof ApiError) {
        this.showBanner(err.message); // server message, verbatim
      } else {
        this.showBanner("network error — check the service and retry");
      }
    }
  }

  renderResult(res: ClassifyResponse): void {
    renderProbabilityChart(this.el.chart, res.probs, this.genres);
    this.el.topGenre.textContent = res.top_genre;
    this.el.recommendations.replaceChildren();
    for (const rec of res.recommendations) {
      const item = document.createElement("li");
      item.textContent = `${rec.title} — similarity ${rec.similarity.toFixed(3)}`;
      item.dataset.songId = rec.song_id;
      this.el.recommendations.appendChild(item);
    }
    this.el.spectrogram.src = `data:image/png;base64,${res.spectrogram_png_base64}`;
    this.el.spectrogram.hidden = false;
  }
}

export function elementsFrom(root: ParentNode): AppElements {
  const pick = <T extends HTMLElement>(id: string): T => {
    const node = root.querySelector<T>(`#${id}`);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  };
  return {
    chart: pick("chart"),
    banner: pick("banner"),
    topGenre: pick("top-genre"),
    recommendations: pick("recommendations"),
    spectrogram: pick<HTMLImageElement>("spectrogram"),
    status: pick("status"),
  };
}
