/** Canvas app wiring: DOM events in, pure modules for the math, API for state. */

import { MattingApi, ApiError } from "./api.js";
import { canvasToImage, imageToCanvas } from "./coords.js";
import { alphaFromRgba, alphaOverChecker, alphaToGrey, uncertaintyHeatmap,
         sigmaFromByte, type OverlayMode } from "./overlay.js";
import { allDisjoint, boxesToScreenRects, type PatchBox } from "./patches.js";
import * as vs from "./state.js";

const api = new MattingApi();
let state = vs.initialState();
let zoom = 1;
let baseImage: HTMLImageElement | null = null;
let alphaPixels: Float32Array | null = null;
let sigmaBytes: Uint8ClampedArray | null = null;
let sigmaRange: [number, number] = [0, 1];
let lastPatches: PatchBox[] = [];

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const fileInput = document.getElementById("file") as HTMLInputElement;
const overlaySelect = document.getElementById("overlay") as HTMLSelectElement;
const budgetSlider = document.getElementById("budget") as HTMLInputElement;
const budgetLabel = document.getElementById("budget-label") as HTMLSpanElement;
const zoomSlider = document.getElementById("zoom") as HTMLInputElement;
const refineBtn = document.getElementById("refine") as HTMLButtonElement;
const undoBtn = document.getElementById("undo") as HTMLButtonElement;
const toast = document.getElementById("toast") as HTMLDivElement;
const legend = document.getElementById("legend") as HTMLSpanElement;

function setState(next: vs.ViewState): void {
  state = vs.drainQueuedBudget(next);
  budgetSlider.value = String(state.budgetK);
  budgetLabel.textContent = `K = ${state.budgetK}`;
  const hasSession = state.server !== null;
  refineBtn.disabled = !hasSession || state.pending || !state.server!.refiner_available;
  refineBtn.title = state.server && !state.server.refiner_available
    ? "no refiner checkpoint loaded on the server" : "";
  undoBtn.disabled = !hasSession || state.pending || vs.visibleClicks(state).length === 0;
  if (state.error) {
    toast.textContent = state.error;
    toast.classList.add("visible");
    setTimeout(() => toast.classList.remove("visible"), 4000);
  }
  draw();
}

async function loadImageElement(url: string): Promise<HTMLImageElement> {
  const img = new Image();
  img.src = url;
  await img.decode();
  return img;
}

async function fetchOutputs(): Promise<void> {
  if (!state.server) return;
  const id = state.server.id;
  const alphaImg = await loadImageElement(api.alphaUrl(id));
  alphaPixels = rasterToAlpha(alphaImg);
  if (state.server.uncertainty_available) {
    const unc = await api.uncertainty(id);
    sigmaRange = [unc.sigmaMin, unc.sigmaMax];
    const uncImg = await loadImageElement(URL.createObjectURL(unc.blob));
    sigmaBytes = rasterToBytes(uncImg);
  }
}

function rasterize(img: HTMLImageElement): ImageData {
  const off = document.createElement("canvas");
  off.width = img.naturalWidth;
  off.height = img.naturalHeight;
  const c = off.getContext("2d")!;
  c.drawImage(img, 0, 0);
  return c.getImageData(0, 0, off.width, off.height);
}

function rasterToAlpha(img: HTMLImageElement): Float32Array {
  return alphaFromRgba(rasterize(img).data);
}

function rasterToBytes(img: HTMLImageElement): Uint8ClampedArray {
  const data = rasterize(img).data;
  const out = new Uint8ClampedArray(data.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = data[i * 4];
  return out;
}

function draw(): void {
  if (!state.server || !baseImage) {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    return;
  }
  const { height, width } = state.server;
  canvas.width = width * zoom;
  canvas.height = height * zoom;
  ctx.imageSmoothingEnabled = zoom < 1;
  const mode = state.overlay as OverlayMode;
  if (mode === "image" || mode === "patch-boxes" || !alphaPixels) {
    ctx.drawImage(baseImage, 0, 0, canvas.width, canvas.height);
  } else {
    let rgba: Uint8ClampedArray;
    if (mode === "alpha") {
      rgba = alphaToGrey(alphaPixels);
    } else if (mode === "alpha-over-checker") {
      rgba = alphaOverChecker(rasterize(baseImage).data, alphaPixels, width);
    } else if (mode === "uncertainty-heatmap" && sigmaBytes) {
      rgba = uncertaintyHeatmap(sigmaBytes);
      legend.textContent =
        `sigma ${sigmaFromByte(0, ...sigmaRange).toExponential(2)} … ` +
        `${sigmaFromByte(255, ...sigmaRange).toExponential(2)}`;
    } else {
      rgba = alphaToGrey(alphaPixels);
    }
    const off = document.createElement("canvas");
    off.width = width;
    off.height = height;
    off.getContext("2d")!.putImageData(
      new ImageData(rgba as Uint8ClampedArray<ArrayBuffer>, width, height), 0, 0);
    ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  }
  drawClickMarkers();
  if (mode === "patch-boxes") drawPatchBoxes();
}

function drawClickMarkers(): void {
  for (const c of vs.visibleClicks(state)) {
    const { x, y } = imageToCanvas(c.row, c.col, zoom);
    ctx.strokeStyle = c.polarity === "fg" ? "#00c853" : "#d50000";
    ctx.lineWidth = 2;
    ctx.beginPath();
    if (c.polarity === "fg") {
      ctx.moveTo(x - 6, y);
      ctx.lineTo(x + 6, y);
      ctx.moveTo(x, y - 6);
      ctx.lineTo(x, y + 6);
    } else {
      ctx.moveTo(x - 6, y);
      ctx.lineTo(x + 6, y);
    }
    ctx.stroke();
  }
}

function drawPatchBoxes(): void {
  if (!allDisjoint(lastPatches)) {
    // the server guarantees disjoint boxes; flag loudly if that breaks
    console.error("server returned overlapping patch boxes", lastPatches);
  }
  ctx.strokeStyle = "#ffab00";
  ctx.lineWidth = 2;
  for (const r of boxesToScreenRects(lastPatches, zoom)) {
    ctx.strokeRect(r.x, r.y, r.w, r.h);
  }
}

async function mutate(run: () => Promise<void>): Promise<void> {
  try {
    await run();
  } catch (err) {
    const msg = err instanceof ApiError ? err.message : String(err);
    setState(vs.fail(state, msg));
  }
}

canvas.addEventListener("contextmenu", (e) => e.preventDefault());
canvas.addEventListener("mousedown", (e) => {
  if (!vs.canMutate(state)) return;
  const rect = canvas.getBoundingClientRect();
  const pos = canvasToImage(e.clientX - rect.left, e.clientY - rect.top, zoom, {
    height: state.server!.height,
    width: state.server!.width,
  });
  if (!pos) return; // outside the image area
  const polarity = e.button === 2 ? "bg" : "fg";
  setState(vs.beginClick(state, pos.row, pos.col, polarity));
  void mutate(async () => {
    const server = await api.click(state.server!.id, pos.row, pos.col, polarity);
    await fetchOutputs();
    lastPatches = [];
    setState(vs.confirm(state, server));
  });
});

undoBtn.addEventListener("click", () => {
  if (!vs.canMutate(state)) return;
  setState(vs.beginMutation(state));
  void mutate(async () => {
    const server = await api.undo(state.server!.id);
    await fetchOutputs();
    lastPatches = [];
    setState(vs.confirm(state, server));
  });
});

refineBtn.addEventListener("click", () => {
  if (!vs.canMutate(state)) return;
  setState(vs.beginMutation(state));
  void mutate(async () => {
    const result = await api.refine(state.server!.id, state.budgetK);
    lastPatches = result.patches;
    const server = await api.state(state.server!.id);
    await fetchOutputs();
    setState(vs.confirm(state, server));
  });
});

budgetSlider.addEventListener("input", () => {
  setState(vs.setBudget(state, Number(budgetSlider.value)));
});

zoomSlider.addEventListener("input", () => {
  zoom = Number(zoomSlider.value);
  draw();
});

overlaySelect.addEventListener("change", () => {
  setState(vs.setOverlay(state, overlaySelect.value as OverlayMode));
});

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  void mutate(async () => {
    const server = await api.createSession(file);
    state = vs.confirm(vs.initialState(), server);
    baseImage = await loadImageElement(api.imageUrl(server.id));
    await fetchOutputs();
    lastPatches = [];
    setState(state);
  });
});
