import { ApiClient } from "./api";
import { App } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = new App(root, new ApiClient());

const sessionId = window.location.hash.slice(1);
if (sessionId) {
    void app.restore(sessionId);
}
