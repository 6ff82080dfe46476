import { boot, parseRoute } from "./app.js";

const root = document.getElementById("app");
if (root !== null) {
  const route = parseRoute(window.location.pathname, window.location.hash);
  void boot(root, route);
  window.addEventListener("hashchange", () => {
    const next = parseRoute(window.location.pathname, window.location.hash);
    void boot(root, next);
  });
}
