// optional peer dependency, resolved only at runtime when installed
declare module "@xenova/transformers";
