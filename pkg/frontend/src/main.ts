/**
 * Boot: ask for a bearer token, then loop over assigned reads one at a
 * time. The token lives only in this tab; drafts live only in the page.
 */

import { ApiClient, ApiError } from "./api.js";
import { renderWorkUnit } from "./view.js";

function statusPage(root: HTMLElement, heading: string, detail: string): void {
  const doc = root.ownerDocument;
  const box = doc.createElement("div");
  box.className = "status-page";
  const h = doc.createElement("h2");
  h.textContent = heading;
  const p = doc.createElement("p");
  p.textContent = detail;
  box.append(h, p);
  root.replaceChildren(box);
}

function tokenForm(root: HTMLElement, onToken: (token: string) => void): void {
  const doc = root.ownerDocument;
  const form = doc.createElement("form");
  form.className = "token-form";
  const label = doc.createElement("label");
  label.textContent = "Marker token";
  const input = doc.createElement("input");
  input.type = "password";
  input.name = "token";
  input.autocomplete = "off";
  const button = doc.createElement("button");
  button.type = "submit";
  button.textContent = "Start session";
  label.appendChild(input);
  form.append(label, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const token = input.value.trim();
    if (token) onToken(token);
  });
  root.replaceChildren(form);
  input.focus();
}

async function markNext(root: HTMLElement, client: ApiClient): Promise<void> {
  let next;
  try {
    next = await client.nextAssignment();
  } catch (err) {
    const detail = err instanceof ApiError ? err.detail : String(err);
    statusPage(root, "Cannot fetch an assignment", detail);
    return;
  }
  if (next.complete || next.assignment === null) {
    statusPage(root, "Queue complete", "Every read assigned to this token has been submitted.");
    return;
  }
  renderWorkUnit(root, next.assignment, {
    onSubmit: (body) => {
      client
        .submitRead(body)
        .then(() => markNext(root, client))
        .catch((err) => {
          const detail = err instanceof ApiError ? err.detail : String(err);
          statusPage(root, "Submit failed", `${detail}. Reload to refetch the assignment; the server keeps the authoritative state.`);
        });
    },
  });
}

export function boot(root: HTMLElement): void {
  tokenForm(root, (token) => {
    const client = new ApiClient("", token);
    void markNext(root, client);
  });
}

const appRoot = document.getElementById("app");
if (appRoot) boot(appRoot);
