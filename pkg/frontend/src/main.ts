import { bootstrap } from "./ui.js";

bootstrap(document.getElementById("app") as HTMLElement);
