/**
 * DOM bindings: gallery, attribute sliders, result panes, grid explorer,
 * toasts. All behavior lives in the controller/state modules; this file
 * only reads state and forwards events.
 */

import { ApiClient } from "./api.js";
import { EditorController, gridCellRect } from "./controller.js";
import { EditorState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function showToast(container: HTMLElement, message: string): void {
  const toast = el("div", "toast", message);
  const close = el("button", "toast-close", "x");
  close.onclick = () => toast.remove();
  toast.appendChild(close);
  container.appendChild(toast);
  setTimeout(() => toast.remove(), 8000);
}

function fileToDataUrl(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () => reject(reader.error);
    reader.readAsDataURL(file);
  });
}

export class EditorView {
  constructor(
    private readonly root: HTMLElement,
    private readonly state: EditorState,
    private readonly controller: EditorController,
  ) {
    state.subscribe(() => this.render());
  }

  bindUpload(input: HTMLInputElement): void {
    input.onchange = async () => {
      for (const file of Array.from(input.files ?? [])) {
        const dataUrl = await fileToDataUrl(file);
        this.state.addToGallery({ dataUrl, label: file.name });
      }
      input.value = "";
    };
  }

  render(): void {
    this.renderGallery();
    this.renderAttributes();
    this.renderResults();
    this.renderStatus();
  }

  private renderStatus(): void {
    const status = this.root.querySelector("#status")!;
    const fp = this.state.serviceFingerprint;
    status.textContent = fp
      ? `service ${fp.slice(0, 12)}${this.state.requestInFlight ? " | transferring..." : ""}`
      : "not connected";
  }

  private renderGallery(): void {
    const gallery = this.root.querySelector("#gallery")!;
    gallery.replaceChildren();
    for (const image of this.state.gallery) {
      const card = el("div", "card");
      const img = el("img") as HTMLImageElement;
      img.src = image.dataUrl;
      img.title = image.label;
      const asSource = el("button", "", "source");
      asSource.onclick = () => {
        this.state.setSource(image);
        this.controller.scheduleTransfer();
      };
      const asRef = el("button", "", "exemplar");
      asRef.onclick = () => {
        this.state.setReference(image);
        this.controller.scheduleTransfer();
      };
      card.append(img, asSource, asRef);
      gallery.appendChild(card);
    }
    const sourcePane = this.root.querySelector("#source-pane")!;
    sourcePane.replaceChildren();
    for (const [label, image] of [["source", this.state.source],
                                  ["exemplar", this.state.reference]] as const) {
      const card = el("div", "card");
      card.appendChild(el("div", "pane-label", label));
      if (image) {
        const img = el("img") as HTMLImageElement;
        img.src = image.dataUrl;
        card.appendChild(img);
      } else {
        card.appendChild(el("div", "placeholder", "pick from gallery"));
      }
      sourcePane.appendChild(card);
    }
  }

  private renderAttributes(): void {
    const panel = this.root.querySelector("#attributes")!;
    panel.replaceChildren();
    this.state.attributes.forEach((row, index) => {
      const line = el("div", "attr-row");
      const toggle = el("input") as HTMLInputElement;
      toggle.type = "checkbox";
      toggle.checked = row.enabled;
      toggle.onchange = () => {
        this.state.toggleAttribute(index, toggle.checked);
        this.controller.scheduleTransfer();
      };
      const slider = el("input") as HTMLInputElement;
      slider.type = "range";
      slider.min = "0";
      slider.max = "1";
      slider.step = "0.01";
      slider.value = String(row.alpha);
      slider.disabled = !row.enabled;
      slider.oninput = () => {
        this.state.setAlpha(index, Number(slider.value));
        this.controller.scheduleTransfer();
      };
      line.append(toggle, el("span", "attr-name", row.name), slider,
                  el("span", "alpha-value", row.alpha.toFixed(2)));
      panel.appendChild(line);
    });
  }

  private renderResults(): void {
    const results = this.root.querySelector("#results")!;
    results.replaceChildren();
    const panes = this.state.results;
    if (!panes) return;
    const entries: Array<[string, string, ("C" | "D")?]> = [
      ["C (source, attribute swapped out)", panes.imageC, "C"],
      ["D (exemplar, attribute swapped in)", panes.imageD, "D"],
      ["residual C", panes.residualC],
      ["residual D", panes.residualD],
    ];
    for (const [label, dataUrl, promote] of entries) {
      const card = el("div", "card");
      card.appendChild(el("div", "pane-label", label));
      const img = el("img") as HTMLImageElement;
      img.src = dataUrl;
      if (promote) {
        img.classList.add("clickable");
        img.title = "click to make this the new source";
        img.onclick = () => {
          this.controller.promoteResult(promote);
          this.controller.scheduleTransfer();
        };
      }
      card.appendChild(img);
      results.appendChild(card);
    }
    results.appendChild(el("div", "fingerprint",
                           `results from ${panes.fingerprint.slice(0, 12)}`));
  }

  bindGridExplorer(toastContainer: HTMLElement): void {
    const run = this.root.querySelector("#grid-run") as HTMLButtonElement;
    const attrSelect = this.root.querySelector("#grid-attr") as HTMLSelectElement;
    const stepsInput = this.root.querySelector("#grid-steps") as HTMLInputElement;
    const target = this.root.querySelector("#grid-result")!;
    run.onclick = async () => {
      try {
        const refs = this.state.reference ? [this.state.reference.dataUrl] : [];
        const blob = await this.controller.interpolateGrid(
          refs, Number(attrSelect.value), Number(stepsInput.value));
        const img = el("img", "grid") as HTMLImageElement;
        const url = URL.createObjectURL(blob);
        img.src = url;
        img.onclick = (event) => this.promoteGridCell(img, event, Number(stepsInput.value));
        target.replaceChildren(img);
      } catch (err) {
        showToast(toastContainer, String(err instanceof Error ? err.message : err));
      }
    };
    this.state.subscribe(() => {
      attrSelect.replaceChildren(
        ...this.state.attributes.map((row, k) => {
          const opt = el("option", "", row.name) as HTMLOptionElement;
          opt.value = String(k);
          return opt;
        }),
      );
    });
  }

  /** Crop the clicked cell out of the grid PNG and promote it to source. */
  private promoteGridCell(img: HTMLImageElement, event: MouseEvent, steps: number): void {
    const scaleX = img.naturalWidth / img.width;
    const scaleY = img.naturalHeight / img.height;
    // one-reference grids are a single strip; multi-reference grids are square
    const cellSpan = (img.naturalWidth + 2) / steps;
    const rows = Math.max(1, Math.round((img.naturalHeight + 2) / cellSpan));
    const rect = gridCellRect(img.naturalWidth, img.naturalHeight, rows, steps,
                              event.offsetX * scaleX, event.offsetY * scaleY);
    if (!rect) return;
    const canvas = document.createElement("canvas");
    canvas.width = rect.w;
    canvas.height = rect.h;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.drawImage(img, rect.x, rect.y, rect.w, rect.h, 0, 0, rect.w, rect.h);
    this.state.setSource({
      dataUrl: canvas.toDataURL("image/png"),
      label: `grid cell (${rect.row}, ${rect.col})`,
    });
    this.controller.scheduleTransfer();
  }
}

export function bootstrap(root: HTMLElement): EditorState {
  const state = new EditorState();
  const toastContainer = root.querySelector("#toasts") as HTMLElement;
  const baseInput = root.querySelector("#service-url") as HTMLInputElement;
  baseInput.value = localStorage.getItem("latentswap-service") ?? "http://127.0.0.1:8000";
  const toast = (message: string) => showToast(toastContainer, message);

  const wire = (baseUrl: string) => {
    const controller = new EditorController(state, new ApiClient(baseUrl), toast);
    const view = new EditorView(root, state, controller);
    view.bindUpload(root.querySelector("#upload") as HTMLInputElement);
    view.bindGridExplorer(toastContainer);
    view.render();
    return controller;
  };

  let controller = wire(baseInput.value);
  const connect = root.querySelector("#connect") as HTMLButtonElement;
  connect.onclick = async () => {
    localStorage.setItem("latentswap-service", baseInput.value);
    controller = wire(baseInput.value);
    try {
      await controller.connect();
    } catch (err) {
      toast(`cannot reach service: ${String(err)}`);
    }
  };
  return state;
}
