import { StewardApi } from "./api.js";
import { DashboardApp } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
const app = new DashboardApp(root, new StewardApi(""));
void app.start(new URLSearchParams(window.location.search).get("scenario") ?? "demo");
