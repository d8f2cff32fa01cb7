import { createApi } from "./api.js";
import { ClassifyApp, elementsFrom } from "./app.js";

async function boot(): Promise<void> {
  const app = new ClassifyApp(createApi(""), elementsFrom(document));
  await app.init();

  const input = document.querySelector<HTMLInputElement>("#file-input");
  const button = document.querySelector<HTMLButtonElement>("#submit");
  if (!input || !button) throw new Error("missing upload controls");

  button.addEventListener("click", () => {
    const file = input.files?.[0];
    if (!file) {
      const banner = document.querySelector<HTMLElement>("#banner");
      if (banner) {
        banner.textContent = "choose a WAV file first";
        banner.hidden = false;
      }
      return;
    }
    void app.submitClip(file);
  });
}

document.addEventListener("DOMContentLoaded", () => {
  void boot();
});
