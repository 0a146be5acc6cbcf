// Entry point: token + user entry, then the dashboard takes over.

import { ApiClient } from "./api.js";
import { Dashboard } from "./app.js";

function boot(): void {
  const form = document.querySelector("#connect-form") as HTMLFormElement | null;
  const root = document.querySelector("#app") as HTMLElement | null;
  if (!form || !root) throw new Error("missing #connect-form or #app");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const token = (form.querySelector("#token") as HTMLInputElement).value;
    const userId = (form.querySelector("#user") as HTMLInputElement).value;
    const api = new ApiClient("", token);
    const dashboard = new Dashboard(root, api, userId);
    void dashboard.refresh();
  });
}

boot();
