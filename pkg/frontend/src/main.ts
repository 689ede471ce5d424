import { ApiClient } from "./api.js";
import { AnnotationSession } from "./session.js";
import { mount } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("service") ?? "";
const client = new ApiClient(base);
const session = new AnnotationSession(client);

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
mount(root, session);

// a token in the URL resumes an existing session after refresh;
// votes already recorded live on the server and are never re-sent
const token = params.get("annotator");
if (token) {
  void session.resume(token);
}
