/** Probability bar chart: ten bars in canonical genre order, argmax highlighted.
 *
 * Values are displayed exactly as the server sent them (to 3 decimals);
 * nothing is reordered or renormalized here.
 */

export function renderProbabilityChart(
  container: HTMLElement,
  probs: number[],
  genres: string[],
): void {
  if (probs.length !== 10) {
    throw new Error(`expected 10 probabilities, got ${probs.length}`);
  }
  if (genres.length !== 10) {
    throw new Error(`expected 10 genre labels, got ${genres.length}`);
  }
  if (probs.every((p) => p === 0)) {
    throw new Error("refusing to render an all-zero probability vector");
  }

  const top = probs.indexOf(Math.max(...probs));
  container.replaceChildren();
  probs.forEach((p, i) => {
    const bar = document.createElement("div");
    bar.className = i === top ? "bar top" : "bar";
    bar.dataset.genre = genres[i];

    const fill = document.createElement("div");
    fill.className = "bar-fill";
    fill.style.height = `${(p * 100).toFixed(1)}%`;

    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = p.toFixed(3);

    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent = genres[i] ?? "";

    bar.append(value, fill, label);
    container.appendChild(bar);
  });
}
